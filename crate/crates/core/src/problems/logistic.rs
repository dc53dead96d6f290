use nalgebra::{DMatrix, DVector};

use super::{FiniteSum, Problem, ProblemConstants, ProblemError, TestBox};

pub const LOGISTIC_SAMPLES: usize = 64;
pub const LOGISTIC_FEATURES: usize = 10;

const REGULARIZATION: f64 = 0.1;
const HALF_WIDTH: f64 = 3.0;
/// `max_z |d^3/dz^3 log(1 + e^{-z})| = 1 / (6 sqrt 3)`.
const SOFTPLUS_THIRD_DERIVATIVE_BOUND: f64 = 0.096_225_044_864_937_63;

/// Fixed dataset: 64 samples with 10 standard-normal features each and
/// labels from a noisy linear rule (not separable).
#[rustfmt::skip]
#[allow(clippy::approx_constant)]
const DATA: [([f64; LOGISTIC_FEATURES], f64); LOGISTIC_SAMPLES] = [
    ([-0.211, -0.518, 0.150, -1.790, 0.284, -0.322, -0.726, 0.099, -1.951, -0.158], 1.0),
    ([-0.731, 0.410, 0.442, -0.928, -0.933, -1.470, -0.788, 0.319, 0.857, 0.229], -1.0),
    ([0.035, -0.867, 0.196, -0.816, 0.240, -0.203, 0.856, 0.202, 1.369, -0.408], 1.0),
    ([0.756, 0.225, 1.697, -1.962, 0.874, -1.024, -0.869, -0.018, -1.511, -1.195], 1.0),
    ([-0.506, -0.322, -1.904, -0.874, -0.146, -0.132, -0.662, -0.004, -0.513, 1.173], -1.0),
    ([-0.809, 0.059, -0.490, 0.855, -0.972, 0.877, -1.195, -1.367, -0.548, 0.092], -1.0),
    ([-1.521, -0.504, -0.004, -0.036, 0.876, 0.784, 0.333, 0.913, 0.940, -1.109], -1.0),
    ([2.185, -0.049, -0.606, 0.600, -0.489, 0.627, -1.201, 0.725, -1.264, 0.376], 1.0),
    ([-0.213, -0.501, 0.153, -0.575, -0.772, 0.395, 1.931, -0.998, 1.155, 1.082], -1.0),
    ([-1.120, 0.190, 0.524, -0.911, 1.079, 0.878, 1.698, 0.390, 0.946, 1.812], 1.0),
    ([0.203, -0.500, -1.451, 0.286, -1.267, 1.098, 0.147, 0.811, 0.163, 1.238], -1.0),
    ([-0.456, 0.050, 1.400, -1.258, 0.193, 0.975, -1.064, -0.700, -1.250, 1.181], -1.0),
    ([-0.189, -0.315, -1.413, -1.064, 0.927, -0.189, -0.401, 0.792, -0.906, 1.613], -1.0),
    ([-0.368, -0.513, -0.265, 0.037, 0.701, -0.699, -0.824, 0.038, 0.339, 0.877], 1.0),
    ([-0.477, 0.967, -1.020, 1.386, -1.092, -0.086, 0.195, 1.013, 1.460, 0.049], -1.0),
    ([1.896, -0.820, 0.327, -0.237, 0.572, -0.952, -1.098, 1.283, 1.064, 0.561], 1.0),
    ([-0.702, 0.592, 0.447, 1.233, 0.233, -1.615, -0.216, -0.027, 0.792, -0.248], 1.0),
    ([-1.058, 1.150, 0.386, -1.097, -0.664, 0.919, -1.349, 0.968, 0.023, -0.152], -1.0),
    ([0.866, -0.424, 0.056, 1.635, -0.845, 1.822, -1.686, -0.856, 0.901, -0.663], -1.0),
    ([-0.318, 0.790, 0.958, 0.490, -0.541, 0.628, 0.154, 1.179, 0.390, -0.796], -1.0),
    ([-0.125, -1.552, 0.629, 0.447, 0.019, -1.346, -0.389, 0.682, -0.184, 0.120], 1.0),
    ([1.145, 0.633, -1.599, 0.367, -0.936, -2.225, 1.160, -1.486, -0.316, 1.249], 1.0),
    ([0.703, -0.062, -0.888, 0.296, -0.068, 0.821, 0.388, 0.729, -1.504, -0.859], 1.0),
    ([0.160, 0.369, -0.624, -0.702, -0.027, 0.125, 1.964, -0.384, 0.537, -1.713], -1.0),
    ([-0.100, -0.321, -1.288, -0.971, -0.645, -0.782, -1.898, -0.324, -0.099, -0.306], -1.0),
    ([0.814, -0.171, 0.099, -0.036, 0.117, -1.060, -0.287, 1.792, 0.326, -0.164], 1.0),
    ([-0.450, 0.378, 0.006, 0.216, 0.875, 0.144, -0.090, -0.614, -1.326, 0.427], 1.0),
    ([0.358, -0.660, -0.559, -1.093, -0.989, -0.348, -0.060, 0.873, 0.561, -0.546], -1.0),
    ([0.810, -1.949, -0.393, 0.483, 1.474, -1.645, -1.208, -0.499, -1.571, -0.047], 1.0),
    ([0.260, -0.269, -0.884, 1.875, 1.575, 0.305, 1.466, -0.793, -1.330, 0.253], 1.0),
    ([1.803, -0.228, 0.754, 1.259, 0.044, 0.841, -0.661, 1.290, 0.421, 0.068], 1.0),
    ([-0.630, -2.856, 0.319, 0.003, -0.116, -0.397, 1.885, -0.087, -0.082, -0.003], 1.0),
    ([-1.072, -0.536, -0.344, 0.317, 0.598, -0.755, 1.057, -2.390, 1.514, 0.658], -1.0),
    ([0.826, 0.139, 0.414, 0.331, -0.347, -0.909, 0.419, 0.270, -0.673, 0.059], 1.0),
    ([-0.727, 2.395, 0.547, 0.646, 0.913, -3.508, 0.032, 1.122, -1.110, 0.364], 1.0),
    ([0.604, -1.237, 3.116, 0.109, -0.032, 0.073, 1.314, 2.631, -0.411, -1.762], 1.0),
    ([0.660, 0.279, 1.361, -1.365, -0.288, 0.034, -0.190, -0.352, -0.466, 1.687], 1.0),
    ([-0.333, 1.172, -0.103, 0.652, 1.190, 0.548, -2.143, -1.136, -0.658, 0.625], -1.0),
    ([-0.821, -0.956, 1.323, 2.131, -1.039, -0.280, 0.074, -1.155, -0.523, -1.699], 1.0),
    ([0.382, -0.289, -1.374, -2.267, 1.219, -0.016, -2.325, 0.050, 2.146, -0.058], -1.0),
    ([1.175, -1.443, 1.108, -1.427, 0.589, -0.398, 0.299, 0.723, -0.826, -1.384], 1.0),
    ([1.771, 0.723, 0.558, 0.079, 2.203, 0.842, -1.959, -0.084, 0.088, -2.437], 1.0),
    ([-1.478, 0.914, -0.451, 1.226, -0.589, -1.468, 2.747, 0.678, -0.307, 1.160], -1.0),
    ([-0.098, -0.872, 0.710, 0.268, -0.748, 0.129, -0.640, 1.846, 0.664, -0.129], 1.0),
    ([-0.797, -1.008, 1.590, -0.152, 1.052, 0.884, 2.092, 0.117, -0.173, -0.159], -1.0),
    ([-0.470, 0.651, 0.781, 0.972, -3.405, -0.722, -0.575, -0.802, 1.181, -0.527], -1.0),
    ([-0.858, 0.314, -0.484, 0.006, -0.720, -0.870, 0.656, -0.022, -0.654, -0.136], -1.0),
    ([0.148, -1.367, 0.263, 0.560, -0.619, 0.243, -1.984, -0.543, 0.634, -0.343], 1.0),
    ([1.021, 0.115, 0.163, -1.984, -1.487, -0.336, -0.113, 1.037, -0.020, 1.058], -1.0),
    ([-1.237, 1.960, -0.563, -0.967, -1.158, -1.597, 0.323, -0.644, -1.130, -0.433], -1.0),
    ([-0.713, 1.366, -0.400, 0.186, -0.446, 1.423, -0.540, -0.390, -1.282, 0.270], -1.0),
    ([0.163, 1.375, 1.356, 2.305, 0.493, 0.525, -0.260, 0.324, -0.775, -0.200], 1.0),
    ([-0.015, 0.680, 0.924, -1.130, -0.917, -0.291, -0.411, -0.404, -1.506, -0.074], -1.0),
    ([-0.542, 0.201, 0.144, -0.966, 0.401, 0.455, -1.571, 0.616, -0.412, 0.155], 1.0),
    ([0.030, -0.483, -1.782, 0.040, -0.575, -0.276, 1.423, -1.449, -0.579, 0.706], -1.0),
    ([-0.719, 1.697, 1.525, -1.730, 1.898, -0.452, -0.223, 2.257, 2.288, -0.188], -1.0),
    ([-0.892, 0.065, 0.957, -0.674, 0.517, 0.100, -0.029, 1.002, -1.469, -1.343], -1.0),
    ([-0.704, 0.834, 0.663, -0.173, 0.606, -1.274, -0.584, 0.669, 1.501, -0.514], -1.0),
    ([0.002, -0.944, -0.650, 0.217, 0.562, -1.037, -0.306, 0.653, 1.274, -1.279], 1.0),
    ([-0.406, -0.258, -0.249, 0.246, -0.396, 0.189, 1.289, 1.282, -0.499, -0.195], -1.0),
    ([0.564, -0.402, -0.525, -0.946, -0.584, -0.947, -0.836, -0.674, -0.135, 1.765], 1.0),
    ([1.616, 0.353, 0.407, 0.660, -0.054, -0.307, 1.412, -1.399, 1.192, -0.901], -1.0),
    ([-1.691, 0.697, -0.838, -2.570, 0.396, 0.384, -0.102, 0.792, -1.116, 0.088], 1.0),
    ([1.316, 0.126, -0.111, -0.728, -0.168, 0.219, -0.779, -0.454, -0.494, -0.043], 1.0),
];

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Ridge-regularized logistic regression on the embedded dataset,
/// `phi_i(x) = log(1 + exp(-y_i a_i^T x)) + (r/2) ||x||^2`, using the first
/// `n` features.
#[derive(Debug, Clone)]
pub struct LogisticFiniteSum {
    n: usize,
    features: Vec<DVector<f64>>,
    labels: Vec<f64>,
    lipschitz_gradient: f64,
    lipschitz_hessian: f64,
    gradient_bound: f64,
    hessian_bound: f64,
}

impl LogisticFiniteSum {
    pub fn new(n: usize) -> Result<Self, ProblemError> {
        if n == 0 || n > LOGISTIC_FEATURES {
            return Err(ProblemError::IncompatibleDimension {
                name: "logistic_finite_sum",
                n,
                reason: "logistic_finite_sum supports 1 <= n <= 10",
            });
        }
        let features: Vec<DVector<f64>> = DATA
            .iter()
            .map(|(a, _)| DVector::from_column_slice(&a[..n]))
            .collect();
        let labels: Vec<f64> = DATA.iter().map(|&(_, y)| y).collect();
        let m = LOGISTIC_SAMPLES as f64;

        let gram = features
            .iter()
            .fold(DMatrix::zeros(n, n), |acc, a| acc + a * a.transpose())
            / m;
        let gram_top = gram
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(0.0_f64, |acc, &v| acc.max(v));
        let max_norm = features.iter().map(|a| a.norm()).fold(0.0_f64, f64::max);
        let mean_cube = features.iter().map(|a| a.norm().powi(3)).sum::<f64>() / m;

        Ok(Self {
            n,
            lipschitz_gradient: 0.25 * gram_top * (1.0 + 1e-12) + REGULARIZATION,
            lipschitz_hessian: SOFTPLUS_THIRD_DERIVATIVE_BOUND * mean_cube * (1.0 + 1e-12),
            gradient_bound: max_norm + REGULARIZATION * TestBox::symmetric(HALF_WIDTH).max_norm(n),
            hessian_bound: 0.25 * max_norm * max_norm + REGULARIZATION,
            features,
            labels,
        })
    }

    fn margin(&self, i: usize, x: &DVector<f64>) -> f64 {
        self.labels[i] * self.features[i].dot(x)
    }
}

impl FiniteSum for LogisticFiniteSum {
    fn component_count(&self) -> usize {
        LOGISTIC_SAMPLES
    }

    fn component_value(&self, i: usize, x: &DVector<f64>) -> f64 {
        softplus(-self.margin(i, x)) + 0.5 * REGULARIZATION * x.norm_squared()
    }

    fn component_gradient(&self, i: usize, x: &DVector<f64>) -> DVector<f64> {
        let w = -self.labels[i] * sigmoid(-self.margin(i, x));
        &self.features[i] * w + x * REGULARIZATION
    }

    fn component_hessian(&self, i: usize, x: &DVector<f64>) -> DMatrix<f64> {
        let s = sigmoid(self.margin(i, x));
        let a = &self.features[i];
        let mut h = a * a.transpose() * (s * (1.0 - s));
        for j in 0..self.n {
            h[(j, j)] += REGULARIZATION;
        }
        h
    }

    fn component_gradient_bound(&self) -> f64 {
        self.gradient_bound
    }

    fn component_hessian_bound(&self) -> f64 {
        self.hessian_bound
    }
}

impl Problem for LogisticFiniteSum {
    fn name(&self) -> &'static str {
        "logistic_finite_sum"
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let m = LOGISTIC_SAMPLES as f64;
        let loss: f64 = (0..LOGISTIC_SAMPLES)
            .map(|i| softplus(-self.margin(i, x)))
            .sum();
        loss / m + 0.5 * REGULARIZATION * x.norm_squared()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let m = LOGISTIC_SAMPLES as f64;
        let mut g = x * REGULARIZATION;
        for i in 0..LOGISTIC_SAMPLES {
            let w = -self.labels[i] * sigmoid(-self.margin(i, x)) / m;
            g.axpy(w, &self.features[i], 1.0);
        }
        g
    }

    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let m = LOGISTIC_SAMPLES as f64;
        let mut h = DMatrix::identity(self.n, self.n) * REGULARIZATION;
        for i in 0..LOGISTIC_SAMPLES {
            let s = sigmoid(self.margin(i, x));
            let a = &self.features[i];
            h += a * a.transpose() * (s * (1.0 - s) / m);
        }
        h
    }

    fn constants(&self) -> ProblemConstants {
        ProblemConstants {
            lipschitz_gradient: self.lipschitz_gradient,
            lipschitz_hessian: self.lipschitz_hessian,
            lower_bound: 0.0,
        }
    }

    fn test_box(&self) -> TestBox {
        TestBox::symmetric(HALF_WIDTH)
    }

    fn default_start(&self) -> DVector<f64> {
        DVector::zeros(self.n)
    }

    fn finite_sum(&self) -> Option<&dyn FiniteSum> {
        Some(self)
    }
}
