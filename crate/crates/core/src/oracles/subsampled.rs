//! Oracles that average a random subsample of finite-sum components.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;

use super::{
    check_inputs, check_positive, FirstOracle, OracleError, OracleSuite, SecondOracle,
    ZerothOracle, ZerothParams,
};
use crate::problems::Problem;
use crate::rng::{RngStream, StreamId};

/// Batch size from the Bernstein-type rule
/// `B = min(m, ceil(2 (G / tol)^2 (ln(1/delta) + ln(2n))))`.
///
/// A zero tolerance or zero failure probability asks for the full batch.
pub fn bernstein_batch_size(m: usize, n: usize, bound: f64, tolerance: f64, delta: f64) -> usize {
    if tolerance <= 0.0 || delta <= 0.0 {
        return m;
    }
    let log_term = (1.0 / delta).ln() + (2.0 * n as f64).ln();
    let raw = 2.0 * (bound / tolerance).powi(2) * log_term;
    if !raw.is_finite() || raw >= m as f64 {
        m
    } else {
        (raw.ceil() as usize).clamp(1, m)
    }
}

fn draw_indices(m: usize, batch: usize, rng: &mut RngStream) -> Vec<usize> {
    index::sample(rng, m, batch).into_vec()
}

/// Zeroth-order oracle averaging a fixed batch of `ceil(m/4)` components.
#[derive(Debug, Clone)]
pub struct SubsampledZeroth {
    problem: Arc<dyn Problem>,
    batch: usize,
    params: ZerothParams,
}

impl SubsampledZeroth {
    pub fn batch(&self) -> usize {
        self.batch
    }

    fn raw_sample(&self, x: &DVector<f64>, rng: &mut RngStream) -> f64 {
        let fs = self.problem.finite_sum().expect("checked at construction");
        let m = fs.component_count();
        if self.batch >= m {
            return self.problem.value(x);
        }
        let idx = draw_indices(m, self.batch, rng);
        idx.iter().map(|&i| fs.component_value(i, x)).sum::<f64>() / self.batch as f64
    }

    /// Estimate `eps_f` and fit a dominating `(lambda, a)` from samples at
    /// random points of the test box (plus the default start).
    fn calibrate(&mut self, seed: u64) {
        const POINTS: usize = 8;
        const DRAWS: usize = 2000;
        // mean-error margin and tail-bound margin factor
        const MEAN_MARGIN: f64 = 1.25;
        const TAIL_MARGIN: f64 = 2.0;

        let n = self.problem.dim();
        let mut point_rng = RngStream::derive(seed, 0, StreamId::Auxiliary(0xCA1));
        let mut points = vec![self.problem.default_start()];
        points.extend((0..POINTS).map(|_| self.problem.test_box().sample(n, &mut point_rng)));

        let mut worst_mean = 0.0_f64;
        let mut errors_per_point = Vec::with_capacity(points.len());
        for (j, x) in points.iter().enumerate() {
            let truth = self.problem.value(x);
            let mut rng = RngStream::derive(seed, 1 + j as u64, StreamId::Auxiliary(0xCA1));
            let mut errs: Vec<f64> = (0..DRAWS)
                .map(|_| (self.raw_sample(x, &mut rng) - truth).abs())
                .collect();
            worst_mean = worst_mean.max(errs.iter().sum::<f64>() / DRAWS as f64);
            errs.sort_by(f64::total_cmp);
            errors_per_point.push(errs);
        }

        let eps_f = (worst_mean * MEAN_MARGIN).max(f64::MIN_POSITIVE);
        let lambda = 1.0 / eps_f;
        // smallest a with TAIL_MARGIN * S(t) <= exp(lambda (a - t)) at every sample t
        let mut a = 0.0_f64;
        for errs in &errors_per_point {
            let total = errs.len() as f64;
            for (rank, &t) in errs.iter().enumerate() {
                let survival = (total - rank as f64) / total;
                a = a.max(t + (TAIL_MARGIN * survival).ln() / lambda);
            }
        }
        self.params = ZerothParams { eps_f, lambda, a };
    }
}

impl ZerothOracle for SubsampledZeroth {
    fn params(&self) -> ZerothParams {
        self.params
    }

    fn sample(&self, x: &DVector<f64>, rng: &mut RngStream) -> f64 {
        self.raw_sample(x, rng)
    }
}

#[derive(Debug, Clone)]
pub struct SubsampledFirst {
    problem: Arc<dyn Problem>,
    kappa: f64,
}

impl SubsampledFirst {
    pub fn batch_size(&self, accuracy: f64, failure_prob: f64) -> usize {
        let fs = self.problem.finite_sum().expect("checked at construction");
        bernstein_batch_size(
            fs.component_count(),
            self.problem.dim(),
            fs.component_gradient_bound(),
            self.kappa * accuracy,
            failure_prob,
        )
    }
}

impl FirstOracle for SubsampledFirst {
    fn kappa(&self) -> f64 {
        self.kappa
    }

    fn sample(
        &self,
        x: &DVector<f64>,
        accuracy: f64,
        failure_prob: f64,
        rng: &mut RngStream,
    ) -> Result<DVector<f64>, OracleError> {
        check_inputs(accuracy, failure_prob)?;
        let fs = self.problem.finite_sum().expect("checked at construction");
        let m = fs.component_count();
        let batch = self.batch_size(accuracy, failure_prob);
        if batch >= m {
            return Ok(self.problem.gradient(x));
        }
        let sum = draw_indices(m, batch, rng)
            .into_iter()
            .fold(DVector::zeros(self.problem.dim()), |acc, i| {
                acc + fs.component_gradient(i, x)
            });
        Ok(sum / batch as f64)
    }
}

#[derive(Debug, Clone)]
pub struct SubsampledSecond {
    problem: Arc<dyn Problem>,
    kappa: f64,
}

impl SubsampledSecond {
    pub fn batch_size(&self, accuracy: f64, failure_prob: f64) -> usize {
        let fs = self.problem.finite_sum().expect("checked at construction");
        bernstein_batch_size(
            fs.component_count(),
            self.problem.dim(),
            fs.component_hessian_bound(),
            self.kappa * accuracy,
            failure_prob,
        )
    }
}

impl SecondOracle for SubsampledSecond {
    fn kappa(&self) -> f64 {
        self.kappa
    }

    fn sample(
        &self,
        x: &DVector<f64>,
        accuracy: f64,
        failure_prob: f64,
        rng: &mut RngStream,
    ) -> Result<DMatrix<f64>, OracleError> {
        check_inputs(accuracy, failure_prob)?;
        let fs = self.problem.finite_sum().expect("checked at construction");
        let m = fs.component_count();
        let batch = self.batch_size(accuracy, failure_prob);
        if batch >= m {
            return Ok(self.problem.hessian(x));
        }
        let n = self.problem.dim();
        let sum = draw_indices(m, batch, rng)
            .into_iter()
            .fold(DMatrix::zeros(n, n), |acc, i| acc + fs.component_hessian(i, x));
        Ok(sum / batch as f64)
    }
}

/// Subsampling oracles for a finite-sum problem.
///
/// The zeroth-order oracle is calibrated at construction from draws seeded
/// by `calibration_seed`.
pub fn subsampled_suite(
    problem: Arc<dyn Problem>,
    kappa_g: f64,
    kappa_h: f64,
    calibration_seed: u64,
) -> Result<OracleSuite, OracleError> {
    check_positive("kappa_g", kappa_g)?;
    check_positive("kappa_H", kappa_h)?;
    let m = match problem.finite_sum() {
        Some(fs) if fs.component_count() >= 2 => fs.component_count(),
        _ => return Err(OracleError::NotFiniteSum),
    };
    let mut zeroth = SubsampledZeroth {
        problem: problem.clone(),
        batch: m.div_ceil(4),
        params: ZerothParams {
            eps_f: 0.0,
            lambda: 1.0,
            a: 0.0,
        },
    };
    zeroth.calibrate(calibration_seed);
    Ok(OracleSuite {
        zeroth: Arc::new(zeroth),
        first: Arc::new(SubsampledFirst {
            problem: problem.clone(),
            kappa: kappa_g,
        }),
        second: Arc::new(SubsampledSecond {
            problem,
            kappa: kappa_h,
        }),
    })
}
