//! Stochastic zeroth-, first- and second-order oracles.
//!
//! * A zeroth-order oracle returns `f(x)` whose error `|f(x) - phi(x)|` has
//!   mean at most `eps_f` and tail `P(err >= t) <= exp(lambda (a - t))`.
//! * A first-order oracle, given `(mu1, delta1)`, returns `g(x)` with
//!   `||g(x) - grad phi(x)|| <= kappa_g mu1` with probability `>= 1 - delta1`.
//! * A second-order oracle, given `(mu2, delta2)`, returns a symmetric `H(x)`
//!   with `||H(x) - hess phi(x)||_op <= kappa_H mu2` w.p. `>= 1 - delta2`.
//!
//! All randomness comes from the caller's [`RngStream`].

mod chi2;
mod noisy;
mod subsampled;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problems::Problem;
use crate::rng::RngStream;

pub use chi2::chi_square_upper_quantile;
pub use noisy::{gaussian_first, gaussian_second, laplace_zeroth, GaussianFirst, GaussianSecond, LaplaceZeroth};
pub use subsampled::{
    bernstein_batch_size, subsampled_suite, SubsampledFirst, SubsampledSecond, SubsampledZeroth,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("accuracy input must be finite and non-negative, got {0}")]
    InvalidAccuracy(f64),
    #[error("failure probability must lie in [0, 1/2), got {0}")]
    InvalidProbability(f64),
    #[error("a noisy oracle cannot meet {0}; use the exact oracle suite")]
    Unsatisfiable(&'static str),
    #[error("oracle parameter `{name}` must be positive and finite, got {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("subsampled oracles need a finite-sum problem with at least two components")]
    NotFiniteSum,
}

/// Intrinsic parameters `(eps_f, lambda, a)` of a zeroth-order oracle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZerothParams {
    pub eps_f: f64,
    pub lambda: f64,
    pub a: f64,
}

pub trait ZerothOracle: Send + Sync + fmt::Debug {
    fn params(&self) -> ZerothParams;
    fn sample(&self, x: &DVector<f64>, rng: &mut RngStream) -> f64;
}

pub trait FirstOracle: Send + Sync + fmt::Debug {
    fn kappa(&self) -> f64;
    /// Exact oracles accept a zero accuracy input.
    fn is_exact(&self) -> bool {
        false
    }
    fn sample(
        &self,
        x: &DVector<f64>,
        accuracy: f64,
        failure_prob: f64,
        rng: &mut RngStream,
    ) -> Result<DVector<f64>, OracleError>;
}

pub trait SecondOracle: Send + Sync + fmt::Debug {
    fn kappa(&self) -> f64;
    fn is_exact(&self) -> bool {
        false
    }
    fn sample(
        &self,
        x: &DVector<f64>,
        accuracy: f64,
        failure_prob: f64,
        rng: &mut RngStream,
    ) -> Result<DMatrix<f64>, OracleError>;
}

/// The three oracles handed to the solver.
#[derive(Debug, Clone)]
pub struct OracleSuite {
    pub zeroth: Arc<dyn ZerothOracle>,
    pub first: Arc<dyn FirstOracle>,
    pub second: Arc<dyn SecondOracle>,
}

impl OracleSuite {
    pub fn is_exact(&self) -> bool {
        self.first.is_exact() && self.second.is_exact()
    }
}

pub(crate) fn check_inputs(accuracy: f64, failure_prob: f64) -> Result<(), OracleError> {
    if !(accuracy >= 0.0) || !accuracy.is_finite() {
        return Err(OracleError::InvalidAccuracy(accuracy));
    }
    if !(0.0..0.5).contains(&failure_prob) {
        return Err(OracleError::InvalidProbability(failure_prob));
    }
    Ok(())
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<(), OracleError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(OracleError::InvalidParameter { name, value })
    }
}

/// Tail parameter declared by exact zeroth-order oracles.
pub const EXACT_ZEROTH_LAMBDA: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct ExactZeroth {
    problem: Arc<dyn Problem>,
}

impl ZerothOracle for ExactZeroth {
    fn params(&self) -> ZerothParams {
        ZerothParams {
            eps_f: 0.0,
            lambda: EXACT_ZEROTH_LAMBDA,
            a: 0.0,
        }
    }

    fn sample(&self, x: &DVector<f64>, _rng: &mut RngStream) -> f64 {
        self.problem.value(x)
    }
}

#[derive(Debug, Clone)]
pub struct ExactFirst {
    problem: Arc<dyn Problem>,
    kappa: f64,
}

impl FirstOracle for ExactFirst {
    fn kappa(&self) -> f64 {
        self.kappa
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn sample(
        &self,
        x: &DVector<f64>,
        accuracy: f64,
        failure_prob: f64,
        _rng: &mut RngStream,
    ) -> Result<DVector<f64>, OracleError> {
        check_inputs(accuracy, failure_prob)?;
        Ok(self.problem.gradient(x))
    }
}

#[derive(Debug, Clone)]
pub struct ExactSecond {
    problem: Arc<dyn Problem>,
    kappa: f64,
}

impl SecondOracle for ExactSecond {
    fn kappa(&self) -> f64 {
        self.kappa
    }

    fn is_exact(&self) -> bool {
        true
    }

    fn sample(
        &self,
        x: &DVector<f64>,
        accuracy: f64,
        failure_prob: f64,
        _rng: &mut RngStream,
    ) -> Result<DMatrix<f64>, OracleError> {
        check_inputs(accuracy, failure_prob)?;
        Ok(self.problem.hessian(x))
    }
}

/// Oracles returning exact values, with `kappa_g = kappa_H = 1`.
pub fn exact_suite(problem: Arc<dyn Problem>) -> OracleSuite {
    exact_suite_with(problem, 1.0, 1.0)
}

/// Exact oracles declaring the given `kappa_g`, `kappa_H`.
pub fn exact_suite_with(problem: Arc<dyn Problem>, kappa_g: f64, kappa_h: f64) -> OracleSuite {
    OracleSuite {
        zeroth: Arc::new(ExactZeroth {
            problem: problem.clone(),
        }),
        first: Arc::new(ExactFirst {
            problem: problem.clone(),
            kappa: kappa_g,
        }),
        second: Arc::new(ExactSecond {
            problem,
            kappa: kappa_h,
        }),
    }
}

/// Operator (spectral) norm of a symmetric matrix.
pub fn symmetric_op_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_problem;

    #[test]
    fn exact_suite_examples() {
        let p = make_problem("quadratic", 2).unwrap();
        let suite = exact_suite(p.clone());
        let x = DVector::from_vec(vec![1.0, 0.0]);
        let mut rng = RngStream::from_seed(0);
        for _ in 0..5 {
            assert_eq!(suite.zeroth.sample(&x, &mut rng), 0.5);
        }
        for &(mu, delta) in &[(0.0, 0.0), (1e-3, 0.1), (10.0, 0.49)] {
            let g = suite.first.sample(&x, mu, delta, &mut rng).unwrap();
            assert_eq!(g, DVector::from_vec(vec![1.0, 0.0]));
            let h = suite.second.sample(&x, mu, delta, &mut rng).unwrap();
            assert_eq!(h, p.hessian(&x));
        }
        assert!(suite.is_exact());
        assert_eq!(suite.zeroth.params().eps_f, 0.0);
    }

    #[test]
    fn exact_second_any_point() {
        let p = make_problem("rosenbrock", 3).unwrap();
        let suite = exact_suite(p.clone());
        let x = DVector::from_vec(vec![0.3, -0.4, 1.1]);
        let mut rng = RngStream::from_seed(0);
        assert_eq!(suite.second.sample(&x, 0.2, 0.05, &mut rng).unwrap(), p.hessian(&x));
    }

    #[test]
    fn input_validation() {
        let p = make_problem("quadratic", 2).unwrap();
        let suite = exact_suite(p);
        let x = DVector::zeros(2);
        let mut rng = RngStream::from_seed(0);
        assert!(matches!(
            suite.first.sample(&x, 0.1, 0.5, &mut rng),
            Err(OracleError::InvalidProbability(_))
        ));
        assert!(matches!(
            suite.first.sample(&x, -1.0, 0.1, &mut rng),
            Err(OracleError::InvalidAccuracy(_))
        ));
        assert!(suite.second.sample(&x, f64::NAN, 0.1, &mut rng).is_err());
    }

    #[test]
    fn op_norm_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![-3.0, 2.0]));
        assert!((symmetric_op_norm(&m) - 3.0).abs() < 1e-14);
    }
}
