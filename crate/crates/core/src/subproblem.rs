//! Global minimization of the cubic model
//! `m(s) = s^T g + 1/2 s^T H s + sigma/3 ||s||^3`.
//!
//! The dense path eigendecomposes `H = Q D Q^T` and solves the secular
//! equation `lambda = sigma ||s(lambda)||` with `(H + lambda I) s(lambda) = -g`
//! on `lambda > max(0, -lambda_min(H))`. The root is found on the shifted
//! variable `nu = lambda - max(0, -lambda_min)` for the monotone function
//! `psi(nu) = lambda / sigma - ||s(lambda)||`.
//!
//! The returned step is a global minimizer, so it satisfies
//! `s^T g + s^T H s + sigma ||s||^3 = 0`, `s^T H s + sigma ||s||^3 >= 0` and
//! `||grad m(s)|| <= eta min(1, ||s||) ||g||` up to rounding.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SubproblemError {
    #[error("cubic model has non-finite entries")]
    NonFinite,
    #[error("regularization weight must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("model Hessian is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("dimension mismatch: gradient has {gradient}, Hessian is {rows}x{cols}")]
    Dimension {
        gradient: usize,
        rows: usize,
        cols: usize,
    },
    #[error("eta must lie in (0, 1), got {0}")]
    InvalidEta(f64),
    #[error("step has dimension {got}, model has dimension {expected}")]
    StepDimension { expected: usize, got: usize },
    #[error("step has non-finite entries")]
    NonFiniteStep,
    #[error("brute-force search supports 1 <= n <= 3, got n = {0}")]
    GridDimension(usize),
    #[error("brute-force search needs a positive radius and at least two points per axis")]
    GridShape,
}

/// `m(x + s) - m(x) = s^T g + 1/2 s^T H s + sigma/3 ||s||^3`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicModel {
    pub g: DVector<f64>,
    pub h: DMatrix<f64>,
    pub sigma: f64,
}

impl CubicModel {
    pub fn new(g: DVector<f64>, h: DMatrix<f64>, sigma: f64) -> Result<Self, SubproblemError> {
        if h.nrows() != g.len() || h.ncols() != g.len() {
            return Err(SubproblemError::Dimension {
                gradient: g.len(),
                rows: h.nrows(),
                cols: h.ncols(),
            });
        }
        if g.iter().chain(h.iter()).any(|v| !v.is_finite()) {
            return Err(SubproblemError::NonFinite);
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(SubproblemError::InvalidSigma(sigma));
        }
        let asym = (&h - h.transpose()).amax();
        if asym > 1e-12 {
            return Err(SubproblemError::NotSymmetric(asym));
        }
        Ok(Self { g, h, sigma })
    }

    pub fn dim(&self) -> usize {
        self.g.len()
    }

    /// `m(x + s) - m(x)`.
    pub fn value(&self, s: &DVector<f64>) -> f64 {
        let hs = &self.h * s;
        s.dot(&self.g) + 0.5 * s.dot(&hs) + self.sigma / 3.0 * s.norm().powi(3)
    }

    /// `g + H s + sigma ||s|| s`.
    pub fn gradient_at(&self, s: &DVector<f64>) -> DVector<f64> {
        &self.g + &self.h * s + s * (self.sigma * s.norm())
    }

    fn check_step(&self, s: &DVector<f64>) -> Result<(), SubproblemError> {
        if s.len() != self.dim() {
            return Err(SubproblemError::StepDimension {
                expected: self.dim(),
                got: s.len(),
            });
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(SubproblemError::NonFiniteStep);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    Converged,
    HardCase,
    ZeroGradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemResult {
    pub s: DVector<f64>,
    /// `sigma ||s||`, the multiplier of the secular equation.
    pub lambda_mult: f64,
    /// `||grad m(s)||`.
    pub grad_norm: f64,
    /// `|s^T g + s^T H s + sigma ||s||^3|`.
    pub scalc_residual: f64,
    /// `s^T H s + sigma ||s||^3`.
    pub curvature_slack: f64,
    pub status: StepStatus,
}

impl SubproblemResult {
    fn certify(model: &CubicModel, s: DVector<f64>, status: StepStatus) -> Self {
        let norm = s.norm();
        let hs = &model.h * &s;
        let shs = s.dot(&hs);
        let cubic = model.sigma * norm.powi(3);
        let grad = &model.g + hs + &s * (model.sigma * norm);
        Self {
            lambda_mult: model.sigma * norm,
            grad_norm: grad.norm(),
            scalc_residual: (s.dot(&model.g) + shs + cubic).abs(),
            curvature_slack: shs + cubic,
            status,
            s,
        }
    }

    /// Whether the step meets both step conditions and the termination test
    /// at the tolerances used throughout the crate.
    pub fn is_certified(&self, model: &CubicModel, eta: f64) -> bool {
        let s_norm = self.s.norm();
        let g_norm = model.g.norm();
        let h_norm = model.h.norm();
        let scalc_ok = self.scalc_residual <= 1e-8 * (g_norm * s_norm).max(1.0);
        let curvature_ok =
            self.curvature_slack >= -1e-10 * (s_norm * s_norm * h_norm).max(1.0);
        let tcs_ok = self.status == StepStatus::ZeroGradient
            || self.grad_norm <= eta * s_norm.min(1.0) * g_norm;
        scalc_ok && curvature_ok && tcs_ok
    }
}

/// Gradient norms below this are treated as exactly zero.
const ZERO_GRADIENT: f64 = 1e-300;
/// Relative width of the minimal eigenvalue cluster.
const CLUSTER_TOL: f64 = 1e-12;
/// Relative size of the gradient along the minimal eigenspace below which the
/// hard case is considered.
const HARD_CASE_TOL: f64 = 1e-12;
const PSI_TOL: f64 = 1e-12;
const MAX_ITERATIONS: usize = 500;

/// Spectral data of the model in the eigenbasis of `H`.
struct Spectrum {
    /// Eigenvalues shifted by `lambda_lo`; exactly zero on the minimal cluster
    /// when `lambda_lo > 0`.
    shifted: Vec<f64>,
    /// `Q^T g`.
    coeffs: Vec<f64>,
    cluster: Vec<usize>,
    lambda_lo: f64,
    q: DMatrix<f64>,
}

impl Spectrum {
    fn new(model: &CubicModel) -> Self {
        let eig = model.h.clone().symmetric_eigen();
        let d: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let q = eig.eigenvectors;
        let coeffs: Vec<f64> = (q.transpose() * &model.g).iter().copied().collect();
        let d_min = d.iter().copied().fold(f64::INFINITY, f64::min);
        let scale = d.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()));
        let cluster: Vec<usize> = (0..d.len())
            .filter(|&i| d[i] - d_min <= CLUSTER_TOL * scale)
            .collect();
        let lambda_lo = (-d_min).max(0.0);
        let shifted = d
            .iter()
            .enumerate()
            .map(|(i, &di)| {
                if lambda_lo > 0.0 && cluster.contains(&i) {
                    0.0
                } else {
                    di + lambda_lo
                }
            })
            .collect();
        Self {
            shifted,
            coeffs,
            cluster,
            lambda_lo,
            q,
        }
    }

    /// `||s||` at shift `nu`, skipping components in `skip`.
    fn step_norm(&self, nu: f64, skip: &[usize]) -> f64 {
        self.coeffs
            .iter()
            .zip(&self.shifted)
            .enumerate()
            .filter(|(i, (c, _))| **c != 0.0 && !skip.contains(i))
            .map(|(_, (c, b))| (c / (b + nu)).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `d/dnu ||s(nu)|| = -(sum c^2 / (b + nu)^3) / ||s||`.
    fn step_norm_slope(&self, nu: f64, norm: f64) -> f64 {
        let cubes: f64 = self
            .coeffs
            .iter()
            .zip(&self.shifted)
            .filter(|(c, _)| **c != 0.0)
            .map(|(c, b)| c * c / (b + nu).powi(3))
            .sum();
        -cubes / norm
    }

    /// `s = -sum c_i / (b_i + nu) q_i`, skipping components in `skip`.
    fn step(&self, nu: f64, skip: &[usize]) -> DVector<f64> {
        let n = self.coeffs.len();
        let mut s = DVector::zeros(n);
        for i in 0..n {
            let c = self.coeffs[i];
            if c == 0.0 || skip.contains(&i) {
                continue;
            }
            s.axpy(-c / (self.shifted[i] + nu), &self.q.column(i), 1.0);
        }
        s
    }

    fn min_eigenvector(&self) -> DVector<f64> {
        self.q.column(self.cluster[0]).into_owned()
    }
}

/// Compute the global minimizer of the cubic model.
pub fn solve(model: &CubicModel, eta: f64) -> Result<SubproblemResult, SubproblemError> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(SubproblemError::InvalidEta(eta));
    }
    let sigma = model.sigma;
    let g_norm = model.g.norm();
    let spec = Spectrum::new(model);
    let n = model.dim();

    if g_norm <= ZERO_GRADIENT {
        let s = if spec.lambda_lo > 0.0 {
            spec.min_eigenvector() * (spec.lambda_lo / sigma)
        } else {
            DVector::zeros(n)
        };
        return Ok(SubproblemResult::certify(model, s, StepStatus::ZeroGradient));
    }

    if spec.lambda_lo > 0.0 {
        let along_min = spec
            .cluster
            .iter()
            .map(|&i| spec.coeffs[i].powi(2))
            .sum::<f64>()
            .sqrt();
        if along_min <= HARD_CASE_TOL * g_norm {
            let target = spec.lambda_lo / sigma;
            let range_norm = spec.step_norm(0.0, &spec.cluster);
            if target - range_norm >= 0.0 {
                let s_range = spec.step(0.0, &spec.cluster);
                let t = (target * target - range_norm * range_norm).max(0.0).sqrt();
                let s = s_range + spec.min_eigenvector() * t;
                return Ok(SubproblemResult::certify(model, s, StepStatus::HardCase));
            }
        }
    }

    let psi = |nu: f64| -> (f64, f64) {
        let norm = spec.step_norm(nu, &[]);
        ((spec.lambda_lo + nu) / sigma - norm, norm)
    };
    let tolerance = |nu: f64| PSI_TOL * ((spec.lambda_lo + nu) / sigma).max(1.0);

    let mut lo = 0.0_f64;
    let mut hi = (sigma * g_norm).sqrt();
    while psi(hi).0 < 0.0 {
        lo = hi;
        hi *= 2.0;
    }

    let mut nu = hi;
    let mut width_before = [f64::INFINITY; 2];
    for _ in 0..MAX_ITERATIONS {
        let (value, norm) = psi(nu);
        // stop once psi is within tolerance and the induced model-gradient
        // residual sigma |psi| ||s|| is well inside the termination test
        let tcs_budget = 0.5 * eta * norm.min(1.0) * g_norm;
        if value.abs() <= tolerance(nu) && sigma * value.abs() * norm <= tcs_budget {
            break;
        }
        if value < 0.0 {
            lo = nu;
        } else {
            hi = nu;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        let slope = 1.0 / sigma - spec.step_norm_slope(nu, norm);
        let newton = nu - value / slope;
        let width = hi - lo;
        let stalled = width > 0.5 * width_before[1];
        width_before = [width, width_before[0]];
        nu = if newton > lo && newton < hi && !stalled && newton.is_finite() {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }

    let s = spec.step(nu, &[]);
    Ok(SubproblemResult::certify(model, s, StepStatus::Converged))
}

/// `m(x) - m(x + s) = -(s^T g + 1/2 s^T H s + sigma/3 ||s||^3)`.
pub fn model_decrease(model: &CubicModel, s: &DVector<f64>) -> Result<f64, SubproblemError> {
    model.check_step(s)?;
    Ok(-model.value(s))
}

/// `grad m(x + s) = g + H s + sigma ||s|| s`.
pub fn model_gradient(
    model: &CubicModel,
    s: &DVector<f64>,
) -> Result<DVector<f64>, SubproblemError> {
    model.check_step(s)?;
    Ok(model.gradient_at(s))
}

/// Exhaustive grid search of `m` over `[-radius, radius]^n` (test oracle).
pub fn brute_force_min(
    model: &CubicModel,
    radius: f64,
    points_per_axis: usize,
) -> Result<(DVector<f64>, f64), SubproblemError> {
    let n = model.dim();
    if n == 0 || n > 3 {
        return Err(SubproblemError::GridDimension(n));
    }
    if !(radius > 0.0) || !radius.is_finite() || points_per_axis < 2 {
        return Err(SubproblemError::GridShape);
    }
    let spacing = 2.0 * radius / (points_per_axis - 1) as f64;
    let coord = |i: usize| -radius + spacing * i as f64;

    let mut idx = vec![0usize; n];
    let mut s = DVector::zeros(n);
    let mut best = (DVector::zeros(n), f64::INFINITY);
    loop {
        for (k, &i) in idx.iter().enumerate() {
            s[k] = coord(i);
        }
        let v = model.value(&s);
        if v < best.1 {
            best = (s.clone(), v);
        }
        // odometer increment
        let mut k = 0;
        loop {
            if k == n {
                return Ok(best);
            }
            idx[k] += 1;
            if idx[k] < points_per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// A priori bound on the norm of any global minimizer:
/// `sigma ||s||^2 <= ||g|| + ||H|| ||s||`.
pub fn minimizer_norm_bound(model: &CubicModel) -> f64 {
    let h = crate::oracles::symmetric_op_norm(&model.h);
    let g = model.g.norm();
    (h + (h * h + 4.0 * model.sigma * g).sqrt()) / (2.0 * model.sigma)
}
