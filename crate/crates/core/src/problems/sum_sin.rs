use nalgebra::{DMatrix, DVector};

use super::{Problem, ProblemConstants, TestBox};

/// `phi(x) = 0.5 ||x||^2 + sum_i sin(x_i)`.
///
/// The Hessian `diag(1 - sin x_i)` has entries in `[0, 2]` and its
/// derivative is bounded by one, so `L = 2` and `L_H = 1` hold globally.
#[derive(Debug, Clone)]
pub struct SumSin {
    n: usize,
    lower_bound: f64,
}

/// Minimum of `t^2/2 + sin t`, attained where `t + cos t = 0`.
fn scalar_minimum() -> f64 {
    let mut t = -0.7_f64;
    for _ in 0..50 {
        let step = (t + t.cos()) / (1.0 - t.sin());
        t -= step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    0.5 * t * t + t.sin()
}

impl SumSin {
    pub fn new(n: usize) -> Self {
        // shave a little off so rounding never pushes phi below the bound
        let lower_bound = n as f64 * scalar_minimum() - 1e-12 * n as f64;
        Self { n, lower_bound }
    }
}

impl Problem for SumSin {
    fn name(&self) -> &'static str {
        "nonconvex_sum_sin"
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        x.iter().map(|&v| 0.5 * v * v + v.sin()).sum()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x.map(|v| v + v.cos())
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_diagonal(&x.map(|v| 1.0 - v.sin()))
    }

    fn constants(&self) -> ProblemConstants {
        ProblemConstants {
            lipschitz_gradient: 2.0,
            lipschitz_hessian: 1.0,
            lower_bound: self.lower_bound,
        }
    }

    fn test_box(&self) -> TestBox {
        TestBox::symmetric(10.0)
    }

    fn default_start(&self) -> DVector<f64> {
        DVector::from_element(self.n, 3.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_minimum_is_stationary_value() {
        // brute-force scan of t^2/2 + sin t
        let scan = (0..200_001)
            .map(|i| -2.0 + 4.0 * i as f64 / 200_000.0)
            .map(|t| 0.5 * t * t + t.sin())
            .fold(f64::INFINITY, f64::min);
        assert!((scalar_minimum() - scan).abs() < 1e-9);
        assert!(scalar_minimum() <= scan);
    }
}
