use nalgebra::{DMatrix, DVector};

use super::{Problem, ProblemConstants, TestBox};

/// `phi(x) = 0.5 ||x||^2`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    n: usize,
}

impl Quadratic {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl Problem for Quadratic {
    fn name(&self) -> &'static str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x.clone()
    }

    fn hessian(&self, _x: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::identity(self.n, self.n)
    }

    fn constants(&self) -> ProblemConstants {
        ProblemConstants {
            lipschitz_gradient: 1.0,
            lipschitz_hessian: 0.0,
            lower_bound: 0.0,
        }
    }

    fn test_box(&self) -> TestBox {
        TestBox::symmetric(10.0)
    }

    fn default_start(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.n);
        x[0] = 1.0;
        x
    }
}
