//! Additive-noise oracles with closed-form calibration.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use super::{
    check_inputs, check_positive, chi_square_upper_quantile, FirstOracle, OracleError,
    SecondOracle, ZerothOracle, ZerothParams,
};
use crate::problems::Problem;
use crate::rng::RngStream;

/// `f(x) = phi(x) + e` with `e ~ Laplace(0, b)`.
///
/// `|e|` is exponential with mean `b`, so the declared parameters are
/// `(eps_f, lambda, a) = (b, 1/b, 0)` and the tail bound holds with equality.
#[derive(Debug, Clone)]
pub struct LaplaceZeroth {
    problem: Arc<dyn Problem>,
    scale: f64,
}

pub fn laplace_zeroth(problem: Arc<dyn Problem>, scale: f64) -> Result<LaplaceZeroth, OracleError> {
    check_positive("laplace scale", scale)?;
    Ok(LaplaceZeroth { problem, scale })
}

impl LaplaceZeroth {
    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl ZerothOracle for LaplaceZeroth {
    fn params(&self) -> ZerothParams {
        ZerothParams {
            eps_f: self.scale,
            lambda: 1.0 / self.scale,
            a: 0.0,
        }
    }

    fn sample(&self, x: &DVector<f64>, rng: &mut RngStream) -> f64 {
        let magnitude: f64 = rng.sample(Exp1);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        self.problem.value(x) + sign * self.scale * magnitude
    }
}

/// `g(x) = grad phi(x) + tau z` with `z ~ N(0, I_n)`.
///
/// `tau = kappa_g mu1 / sqrt(Q)` where `Q` is the upper `delta1` quantile of
/// `chi2_n`, so `P(||g - grad phi|| > kappa_g mu1) = delta1` exactly.
#[derive(Debug, Clone)]
pub struct GaussianFirst {
    problem: Arc<dyn Problem>,
    kappa: f64,
}

pub fn gaussian_first(problem: Arc<dyn Problem>, kappa_g: f64) -> Result<GaussianFirst, OracleError> {
    check_positive("kappa_g", kappa_g)?;
    Ok(GaussianFirst {
        problem,
        kappa: kappa_g,
    })
}

impl GaussianFirst {
    /// Per-coordinate noise level for the given inputs.
    pub fn noise_scale(&self, accuracy: f64, failure_prob: f64) -> Result<f64, OracleError> {
        check_inputs(accuracy, failure_prob)?;
        if failure_prob == 0.0 {
            return Err(OracleError::Unsatisfiable("a zero failure probability"));
        }
        if accuracy == 0.0 {
            return Err(OracleError::Unsatisfiable("a zero accuracy tolerance"));
        }
        let dof = self.problem.dim() as f64;
        Ok(self.kappa * accuracy / chi_square_upper_quantile(dof, failure_prob).sqrt())
    }
}

impl FirstOracle for GaussianFirst {
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
        let tau = self.noise_scale(accuracy, failure_prob)?;
        let mut g = self.problem.gradient(x);
        for v in g.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v += tau * z;
        }
        Ok(g)
    }
}

/// `H(x) = hess phi(x) + c (W + W^T) / 2` with Gaussian `W`.
///
/// `||E||_F^2 / c^2` is chi-square with `n(n+1)/2` degrees of freedom, and
/// `c` puts its upper `delta2` quantile at `kappa_H mu2`. The operator norm
/// is at most the Frobenius norm, so the contract holds conservatively.
#[derive(Debug, Clone)]
pub struct GaussianSecond {
    problem: Arc<dyn Problem>,
    kappa: f64,
}

pub fn gaussian_second(
    problem: Arc<dyn Problem>,
    kappa_h: f64,
) -> Result<GaussianSecond, OracleError> {
    check_positive("kappa_H", kappa_h)?;
    Ok(GaussianSecond {
        problem,
        kappa: kappa_h,
    })
}

impl GaussianSecond {
    pub fn noise_scale(&self, accuracy: f64, failure_prob: f64) -> Result<f64, OracleError> {
        check_inputs(accuracy, failure_prob)?;
        if failure_prob == 0.0 {
            return Err(OracleError::Unsatisfiable("a zero failure probability"));
        }
        if accuracy == 0.0 {
            return Err(OracleError::Unsatisfiable("a zero accuracy tolerance"));
        }
        let n = self.problem.dim() as f64;
        let dof = n * (n + 1.0) / 2.0;
        Ok(self.kappa * accuracy / chi_square_upper_quantile(dof, failure_prob).sqrt())
    }
}

impl SecondOracle for GaussianSecond {
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
        let c = self.noise_scale(accuracy, failure_prob)?;
        let n = self.problem.dim();
        let w = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
        let mut h = self.problem.hessian(x);
        for i in 0..n {
            h[(i, i)] += c * w[(i, i)];
            for j in i + 1..n {
                let e = 0.5 * c * (w[(i, j)] + w[(j, i)]);
                h[(i, j)] += e;
                h[(j, i)] += e;
            }
        }
        Ok(h)
    }
}
