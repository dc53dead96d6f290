//! Benchmark objectives with analytic derivatives and certified constants.
//!
//! A [`Problem`] is the ground truth: oracles wrap it to produce noisy
//! estimates, and the telemetry uses it to classify iterations. The solver
//! itself never reads it directly.

mod logistic;
mod quadratic;
mod rosenbrock;
mod sum_sin;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use logistic::{LogisticFiniteSum, LOGISTIC_FEATURES, LOGISTIC_SAMPLES};
pub use quadratic::Quadratic;
pub use rosenbrock::Rosenbrock;
pub use sum_sin::SumSin;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("unknown problem family `{0}`")]
    UnknownName(String),
    #[error("problem `{name}` does not support dimension {n}: {reason}")]
    IncompatibleDimension {
        name: &'static str,
        n: usize,
        reason: &'static str,
    },
    #[error("non-finite objective value at probe point {0:?}")]
    NonFinite(Vec<f64>),
    #[error("finite-difference step must be positive, got {0}")]
    InvalidStep(f64),
    #[error("point has dimension {got}, problem has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Constants of the objective, valid inside the family's [`TestBox`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    /// Lipschitz constant of the gradient (`L`).
    pub lipschitz_gradient: f64,
    /// Lipschitz constant of the Hessian in operator norm (`L_H`).
    pub lipschitz_hessian: f64,
    /// Lower bound on the objective (`phi*`).
    pub lower_bound: f64,
}

/// Axis-aligned box `[lower, upper]^n` on which the constants are certified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestBox {
    pub lower: f64,
    pub upper: f64,
}

impl TestBox {
    pub fn symmetric(half_width: f64) -> Self {
        Self {
            lower: -half_width,
            upper: half_width,
        }
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.iter().all(|&v| v >= self.lower && v <= self.upper)
    }

    /// Largest Euclidean norm of a point in the box.
    pub fn max_norm(&self, n: usize) -> f64 {
        self.lower.abs().max(self.upper.abs()) * (n as f64).sqrt()
    }

    /// Uniform point in the box.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> DVector<f64> {
        DVector::from_fn(n, |_, _| {
            self.lower + (self.upper - self.lower) * rng.random::<f64>()
        })
    }
}

/// A twice-differentiable objective with known constants.
pub trait Problem: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
    fn constants(&self) -> ProblemConstants;
    fn test_box(&self) -> TestBox;
    /// Conventional starting point for the family.
    fn default_start(&self) -> DVector<f64>;
    /// Component access for objectives of the form `(1/m) sum_i phi_i(x)`.
    fn finite_sum(&self) -> Option<&dyn FiniteSum> {
        None
    }
}

/// Components of a finite-sum objective.
pub trait FiniteSum: Send + Sync {
    fn component_count(&self) -> usize;
    fn component_value(&self, i: usize, x: &DVector<f64>) -> f64;
    fn component_gradient(&self, i: usize, x: &DVector<f64>) -> DVector<f64>;
    fn component_hessian(&self, i: usize, x: &DVector<f64>) -> DMatrix<f64>;
    /// Bound on `||grad phi_i(x)||` over the test box.
    fn component_gradient_bound(&self) -> f64;
    /// Bound on `||hess phi_i(x)||_op` over the test box.
    fn component_hessian_bound(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Quadratic,
    Rosenbrock,
    NonconvexSumSin,
    LogisticFiniteSum,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::Quadratic => "quadratic",
            ProblemKind::Rosenbrock => "rosenbrock",
            ProblemKind::NonconvexSumSin => "nonconvex_sum_sin",
            ProblemKind::LogisticFiniteSum => "logistic_finite_sum",
        }
    }

    pub const ALL: [ProblemKind; 4] = [
        ProblemKind::Quadratic,
        ProblemKind::Rosenbrock,
        ProblemKind::NonconvexSumSin,
        ProblemKind::LogisticFiniteSum,
    ];
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemKind {
    type Err = ProblemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ProblemError::UnknownName(s.to_string()))
    }
}

/// Build a benchmark problem by family name.
pub fn make_problem(name: &str, n: usize) -> Result<Arc<dyn Problem>, ProblemError> {
    build_problem(name.parse()?, n)
}

pub fn build_problem(kind: ProblemKind, n: usize) -> Result<Arc<dyn Problem>, ProblemError> {
    if n == 0 {
        return Err(ProblemError::IncompatibleDimension {
            name: kind.as_str(),
            n,
            reason: "dimension must be positive",
        });
    }
    Ok(match kind {
        ProblemKind::Quadratic => Arc::new(Quadratic::new(n)),
        ProblemKind::Rosenbrock => Arc::new(Rosenbrock::new(n)?),
        ProblemKind::NonconvexSumSin => Arc::new(SumSin::new(n)),
        ProblemKind::LogisticFiniteSum => Arc::new(LogisticFiniteSum::new(n)?),
    })
}

/// Largest finite-difference discrepancies found by [`check_derivatives`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeReport {
    pub gradient_error: f64,
    pub hessian_error: f64,
}

fn relative_gap(approx: f64, exact: f64) -> f64 {
    (approx - exact).abs() / exact.abs().max(1.0)
}

/// Compare analytic derivatives against central differences at `x`.
///
/// The gradient is differenced from values, the Hessian from analytic
/// gradients. Errors are entrywise `|fd - exact| / max(1, |exact|)`.
pub fn check_derivatives(
    problem: &dyn Problem,
    x: &DVector<f64>,
    step: f64,
) -> Result<DerivativeReport, ProblemError> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(ProblemError::InvalidStep(step));
    }
    let n = problem.dim();
    if x.len() != n {
        return Err(ProblemError::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let grad = problem.gradient(x);
    let hess = problem.hessian(x);

    let mut gradient_error = 0.0_f64;
    let mut hessian_error = 0.0_f64;
    for i in 0..n {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += step;
        xm[i] -= step;
        let (fp, fm) = (problem.value(&xp), problem.value(&xm));
        if !fp.is_finite() {
            return Err(ProblemError::NonFinite(xp.as_slice().to_vec()));
        }
        if !fm.is_finite() {
            return Err(ProblemError::NonFinite(xm.as_slice().to_vec()));
        }
        let width = xp[i] - xm[i];
        gradient_error = gradient_error.max(relative_gap((fp - fm) / width, grad[i]));

        let column = (problem.gradient(&xp) - problem.gradient(&xm)) / width;
        for j in 0..n {
            hessian_error = hessian_error.max(relative_gap(column[j], hess[(j, i)]));
        }
    }
    Ok(DerivativeReport {
        gradient_error,
        hessian_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use approx::assert_abs_diff_eq;

    fn all_problems() -> Vec<Arc<dyn Problem>> {
        vec![
            make_problem("quadratic", 3).unwrap(),
            make_problem("rosenbrock", 4).unwrap(),
            make_problem("nonconvex_sum_sin", 5).unwrap(),
            make_problem("logistic_finite_sum", 4).unwrap(),
        ]
    }

    #[test]
    fn quadratic_example() {
        let p = make_problem("quadratic", 2).unwrap();
        let x = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(p.gradient(&x), DVector::from_vec(vec![1.0, 0.0]));
        assert_eq!(p.hessian(&x), DMatrix::identity(2, 2));
        let c = p.constants();
        assert_eq!(
            (c.lipschitz_gradient, c.lipschitz_hessian, c.lower_bound),
            (1.0, 0.0, 0.0)
        );
    }

    #[test]
    fn rosenbrock_minimizer() {
        let p = make_problem("rosenbrock", 2).unwrap();
        let x = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(p.value(&x), 0.0);
        assert_eq!(p.gradient(&x), DVector::zeros(2));
    }

    #[test]
    fn sum_sin_at_origin() {
        let p = make_problem("nonconvex_sum_sin", 2).unwrap();
        let x = DVector::zeros(2);
        assert_abs_diff_eq!(p.gradient(&x), DVector::from_vec(vec![1.0, 1.0]), epsilon = 1e-15);
        assert_abs_diff_eq!(p.hessian(&x), DMatrix::identity(2, 2), epsilon = 1e-15);
        // independent check by central differences
        let r = check_derivatives(p.as_ref(), &x, 1e-5).unwrap();
        assert!(r.gradient_error < 1e-9 && r.hessian_error < 1e-9, "{r:?}");
    }

    #[test]
    fn bad_names_and_dimensions() {
        assert!(matches!(
            make_problem("himmelblau", 2),
            Err(ProblemError::UnknownName(_))
        ));
        assert!(matches!(
            make_problem("rosenbrock", 1),
            Err(ProblemError::IncompatibleDimension { .. })
        ));
        assert!(matches!(
            make_problem("logistic_finite_sum", 11),
            Err(ProblemError::IncompatibleDimension { .. })
        ));
        assert!(make_problem("quadratic", 0).is_err());
    }

    #[test]
    fn check_derivatives_examples() {
        let q = make_problem("quadratic", 2).unwrap();
        let r = check_derivatives(q.as_ref(), &DVector::from_vec(vec![1.0, 0.0]), 1e-5).unwrap();
        assert!(r.gradient_error <= 1e-8 && r.hessian_error <= 1e-8, "{r:?}");

        let rb = make_problem("rosenbrock", 2).unwrap();
        let r = check_derivatives(rb.as_ref(), &DVector::from_vec(vec![-1.2, 1.0]), 1e-5).unwrap();
        assert!(r.gradient_error <= 1e-5 && r.hessian_error <= 1e-5, "{r:?}");

        let lg = make_problem("logistic_finite_sum", 4).unwrap();
        let x = DVector::from_vec(vec![0.3, -1.1, 2.0, 0.7]);
        let r = check_derivatives(lg.as_ref(), &x, 1e-5).unwrap();
        assert!(r.gradient_error <= 1e-5 && r.hessian_error <= 1e-5, "{r:?}");
    }

    #[test]
    fn check_derivatives_rejects_bad_step() {
        let q = make_problem("quadratic", 2).unwrap();
        let x = DVector::zeros(2);
        assert!(matches!(
            check_derivatives(q.as_ref(), &x, 0.0),
            Err(ProblemError::InvalidStep(_))
        ));
        assert!(check_derivatives(q.as_ref(), &DVector::zeros(3), 1e-5).is_err());
    }

    #[test]
    fn derivatives_on_random_points() {
        let mut rng = RngStream::from_seed(11);
        for p in all_problems() {
            let bx = p.test_box();
            for _ in 0..100 {
                let x = bx.sample(p.dim(), &mut rng);
                let r = check_derivatives(p.as_ref(), &x, 1e-5).unwrap();
                assert!(
                    r.gradient_error <= 1e-5 && r.hessian_error <= 1e-5,
                    "{} at {:?}: {r:?}",
                    p.name(),
                    x.as_slice()
                );
            }
        }
    }

    #[test]
    fn hessians_symmetric_and_bounded_below() {
        let mut rng = RngStream::from_seed(12);
        for p in all_problems() {
            let bx = p.test_box();
            let phi_star = p.constants().lower_bound;
            for _ in 0..200 {
                let x = bx.sample(p.dim(), &mut rng);
                let h = p.hessian(&x);
                assert!((&h - h.transpose()).amax() <= 1e-12);
                assert!(p.value(&x) >= phi_star, "{} below phi*", p.name());
            }
        }
    }

    fn op_norm(m: &DMatrix<f64>) -> f64 {
        m.clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    #[test]
    fn lipschitz_constants_hold_in_box() {
        let mut rng = RngStream::from_seed(13);
        for p in all_problems() {
            let bx = p.test_box();
            let c = p.constants();
            for _ in 0..1000 {
                let x = bx.sample(p.dim(), &mut rng);
                // mix of far pairs and close pairs
                let y = if rng.uniform() < 0.5 {
                    bx.sample(p.dim(), &mut rng)
                } else {
                    let d = DVector::from_fn(p.dim(), |_, _| 1e-3 * (rng.uniform() - 0.5));
                    (&x + d).map(|v| v.clamp(bx.lower, bx.upper))
                };
                let dist = (&x - &y).norm();
                let dg = (p.gradient(&x) - p.gradient(&y)).norm();
                let dh = op_norm(&(p.hessian(&x) - p.hessian(&y)));
                assert!(dg <= c.lipschitz_gradient * dist + 1e-9, "{} L", p.name());
                assert!(dh <= c.lipschitz_hessian * dist + 1e-9, "{} L_H", p.name());
            }
        }
    }

    #[test]
    fn finite_sum_averages_match() {
        let p = make_problem("logistic_finite_sum", 6).unwrap();
        let fs = p.finite_sum().expect("finite sum");
        let m = fs.component_count() as f64;
        let mut rng = RngStream::from_seed(14);
        for _ in 0..20 {
            let x = p.test_box().sample(6, &mut rng);
            let v: f64 = (0..fs.component_count()).map(|i| fs.component_value(i, &x)).sum::<f64>() / m;
            let g = (0..fs.component_count())
                .map(|i| fs.component_gradient(i, &x))
                .fold(DVector::zeros(6), |a, b| a + b)
                / m;
            let h = (0..fs.component_count())
                .map(|i| fs.component_hessian(i, &x))
                .fold(DMatrix::zeros(6, 6), |a, b| a + b)
                / m;
            assert!((v - p.value(&x)).abs() <= 1e-10 * p.value(&x).abs().max(1.0));
            assert!((&g - p.gradient(&x)).norm() <= 1e-10 * p.gradient(&x).norm().max(1.0));
            assert!((&h - p.hessian(&x)).norm() <= 1e-10 * p.hessian(&x).norm().max(1.0));
        }
    }

    #[test]
    fn component_bounds_hold() {
        let p = make_problem("logistic_finite_sum", 10).unwrap();
        let fs = p.finite_sum().unwrap();
        let mut rng = RngStream::from_seed(15);
        for _ in 0..50 {
            let x = p.test_box().sample(10, &mut rng);
            for i in 0..fs.component_count() {
                assert!(fs.component_gradient(i, &x).norm() <= fs.component_gradient_bound());
                assert!(op_norm(&fs.component_hessian(i, &x)) <= fs.component_hessian_bound());
            }
        }
    }

    #[test]
    fn only_logistic_is_finite_sum() {
        for p in all_problems() {
            assert_eq!(p.finite_sum().is_some(), p.name() == "logistic_finite_sum");
        }
    }
}
