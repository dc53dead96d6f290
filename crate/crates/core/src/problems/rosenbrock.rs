use nalgebra::{DMatrix, DVector};

use super::{Problem, ProblemConstants, ProblemError, TestBox};

const HALF_WIDTH: f64 = 2.0;

/// Chained Rosenbrock, `sum_i 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2`.
///
/// No global Lipschitz constants exist; the ones reported hold on
/// `[-2, 2]^n`. `L` is a Gershgorin bound on the Hessian and `L_H` bounds
/// the Frobenius norm of Hessian differences.
#[derive(Debug, Clone)]
pub struct Rosenbrock {
    n: usize,
}

impl Rosenbrock {
    pub fn new(n: usize) -> Result<Self, ProblemError> {
        if n < 2 {
            return Err(ProblemError::IncompatibleDimension {
                name: "rosenbrock",
                n,
                reason: "rosenbrock requires n >= 2",
            });
        }
        Ok(Self { n })
    }
}

impl Problem for Rosenbrock {
    fn name(&self) -> &'static str {
        "rosenbrock"
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (0..self.n - 1)
            .map(|i| {
                let a = x[i + 1] - x[i] * x[i];
                let b = 1.0 - x[i];
                100.0 * a * a + b * b
            })
            .sum()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.n);
        for i in 0..self.n - 1 {
            let a = x[i + 1] - x[i] * x[i];
            g[i] += -400.0 * x[i] * a - 2.0 * (1.0 - x[i]);
            g[i + 1] += 200.0 * a;
        }
        g
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n - 1 {
            h[(i, i)] += 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
            h[(i + 1, i + 1)] += 200.0;
            h[(i, i + 1)] -= 400.0 * x[i];
            h[(i + 1, i)] -= 400.0 * x[i];
        }
        h
    }

    fn constants(&self) -> ProblemConstants {
        let b = HALF_WIDTH;
        // row sum: |2 + 1200 b^2 + 400 b + 200| + two off-diagonals of 400 b
        let lipschitz_gradient = 202.0 + 1200.0 * b * b + 1200.0 * b;
        // ||dH||_F^2 <= (2 (2400 b)^2 + 4 * 400^2) ||dx||^2
        let lipschitz_hessian = (2.0 * (2400.0 * b).powi(2) + 4.0 * 400.0_f64.powi(2)).sqrt();
        ProblemConstants {
            lipschitz_gradient,
            lipschitz_hessian,
            lower_bound: 0.0,
        }
    }

    fn test_box(&self) -> TestBox {
        TestBox::symmetric(HALF_WIDTH)
    }

    fn default_start(&self) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| if i % 2 == 0 { -1.2 } else { 1.0 })
    }
}
