//! The SARC outer loop.
//!
//! Each iteration samples `g_k` with inputs `(mu / sigma_k, delta1)` and `H_k`
//! with `(sqrt(mu / sigma_k), delta2)`, minimizes the cubic model, estimates
//! `f` at `x_k` and `x_k + s_k`, and accepts the step when
//! `rho_k = (f(x_k) - f(x_k^+) + 2 eps_f') / (m_k(x_k) - m_k(x_k^+)) >= theta`.
//! Ground-truth telemetry (errors, true-iteration flags, progress) is recorded
//! alongside but never feeds back into the algorithm, except for the
//! omniscient stopping rule.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::TheoryConstants;
use crate::oracles::{OracleError, OracleSuite};
use crate::problems::Problem;
use crate::rng::{RngStream, StreamId};
use crate::subproblem::{self, CubicModel, StepStatus, SubproblemError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriverError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("mu = 0 asks noisy oracles for zero accuracy; use mu > 0 or exact oracles")]
    ZeroMuWithNoisyOracles,
    #[error("starting point has dimension {got}, problem has dimension {expected}")]
    StartDimension { expected: usize, got: usize },
    #[error("oracle failure at iteration {k}: {source}")]
    Oracle { k: usize, source: OracleError },
    #[error("subproblem failure at iteration {k}: {source}")]
    Subproblem { k: usize, source: SubproblemError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopMode {
    /// Stop as soon as the true gradient norm at a trial point is `<= epsilon`.
    #[default]
    Omniscient,
    /// Always run `max_iterations` and read `T_eps` off the telemetry.
    BudgetOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SarcConfig {
    pub gamma: f64,
    pub theta: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub sigma_min: f64,
    pub eta: f64,
    pub mu: f64,
    pub eps_f_prime: f64,
    pub sigma0: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub master_seed: u64,
    pub stop_mode: StopMode,
    /// Starting point; the problem's default start when absent.
    pub x0: Option<Vec<f64>>,
}

impl Default for SarcConfig {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            theta: 0.5,
            delta1: 0.05,
            delta2: 0.05,
            sigma_min: 0.1,
            eta: 0.5,
            mu: 0.0,
            eps_f_prime: 1e-8,
            sigma0: 1.0,
            epsilon: 1e-4,
            max_iterations: 1000,
            master_seed: 0,
            stop_mode: StopMode::Omniscient,
            x0: None,
        }
    }
}

impl SarcConfig {
    pub fn validate(&self) -> Result<(), DriverError> {
        let open_unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(DriverError::InvalidConfig(format!(
                    "{name} must lie in (0, 1), got {v}"
                )))
            }
        };
        let half_open = |name: &str, v: f64| {
            if (0.0..0.5).contains(&v) {
                Ok(())
            } else {
                Err(DriverError::InvalidConfig(format!(
                    "{name} must lie in [0, 1/2), got {v}"
                )))
            }
        };
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(DriverError::InvalidConfig(format!(
                    "{name} must be positive and finite, got {v}"
                )))
            }
        };
        open_unit("gamma", self.gamma)?;
        open_unit("theta", self.theta)?;
        open_unit("eta", self.eta)?;
        half_open("delta1", self.delta1)?;
        half_open("delta2", self.delta2)?;
        positive("sigma_min", self.sigma_min)?;
        positive("eps_f_prime", self.eps_f_prime)?;
        positive("epsilon", self.epsilon)?;
        positive("sigma0", self.sigma0)?;
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(DriverError::InvalidConfig(format!(
                "mu must be finite and non-negative, got {}",
                self.mu
            )));
        }
        if self.sigma0 < self.sigma_min {
            return Err(DriverError::InvalidConfig(format!(
                "sigma0 ({}) must be at least sigma_min ({})",
                self.sigma0, self.sigma_min
            )));
        }
        if let Some(x0) = &self.x0 {
            if x0.iter().any(|v| !v.is_finite()) {
                return Err(DriverError::InvalidConfig("x0 has non-finite entries".into()));
            }
        }
        Ok(())
    }

    /// `mu <= (1 - eta) epsilon / (1 + (1 - theta/3) sigma_bar / sigma_min)`.
    pub fn mu_condition_holds(&self, sigma_bar: f64) -> bool {
        let bound = (1.0 - self.eta) * self.epsilon
            / (1.0 + (1.0 - self.theta / 3.0) * sigma_bar / self.sigma_min);
        self.mu <= bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SarcState {
    pub x: DVector<f64>,
    pub sigma: f64,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub x: DVector<f64>,
    pub sigma: f64,
    pub g: DVector<f64>,
    pub h: DMatrix<f64>,
    pub s: DVector<f64>,
    pub step_status: StepStatus,
    pub f_x: f64,
    pub f_xplus: f64,
    /// Undefined when the step is zero or the model does not decrease.
    pub rho: Option<f64>,
    pub successful: bool,
    pub model_dec: f64,
    /// `I_k`.
    pub true_iter: bool,
    /// `J_k`.
    pub model_flag: bool,
    pub e_k: f64,
    pub e_kplus: f64,
    /// `||grad phi(x_k) - g_k||`.
    pub grad_error: f64,
    /// `||(hess phi(x_k) - H_k) s_k||`.
    pub hess_error_on_step: f64,
    pub phi_x: f64,
    pub phi_xplus: f64,
    pub grad_norm_x: f64,
    pub grad_norm_xplus: f64,
    /// `Z_k = phi(x_k) - phi*`.
    pub z_k: f64,
}

impl IterationRecord {
    pub fn step_norm(&self) -> f64 {
        self.s.norm()
    }

    pub fn x_plus(&self) -> DVector<f64> {
        &self.x + &self.s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub records: Vec<IterationRecord>,
    /// `min{k : ||grad phi(x_k^+)|| <= epsilon} + 1`, if reached.
    pub t_eps: Option<usize>,
    pub final_x: DVector<f64>,
    pub final_sigma: f64,
    /// `phi(final_x) - phi*`.
    pub final_z: f64,
}

impl Trace {
    /// `Z_{k+1}` for record `k`.
    pub fn z_after(&self, k: usize) -> f64 {
        self.records
            .get(k + 1)
            .map_or(self.final_z, |next| next.z_k)
    }
}

/// `max{mu / sigma, ||s||^2}`, the scale of the true-iteration error bounds.
fn accuracy_scale(mu: f64, sigma: f64, s: &DVector<f64>) -> f64 {
    (mu / sigma).max(s.norm_squared())
}

/// Value estimates at `x_k` and `x_k^+` from independent streams.
fn sample_values(
    oracles: &OracleSuite,
    x: &DVector<f64>,
    x_plus: &DVector<f64>,
    seed: u64,
    k: usize,
) -> (f64, f64) {
    let mut at_x = RngStream::derive(seed, k as u64, StreamId::ValueAtIterate);
    let mut at_plus = RngStream::derive(seed, k as u64, StreamId::ValueAtTrial);
    (
        oracles.zeroth.sample(x, &mut at_x),
        oracles.zeroth.sample(x_plus, &mut at_plus),
    )
}

/// One iteration of the algorithm from `state`.
pub fn sarc_step(
    state: &SarcState,
    problem: &dyn Problem,
    oracles: &OracleSuite,
    cfg: &SarcConfig,
) -> Result<(SarcState, IterationRecord), DriverError> {
    let SarcState { x, sigma, k } = state;
    let (sigma, k) = (*sigma, *k);
    let seed = cfg.master_seed;

    let mu1 = cfg.mu / sigma;
    let mu2 = mu1.sqrt();
    let mut g_rng = RngStream::derive(seed, k as u64, StreamId::Gradient);
    let mut h_rng = RngStream::derive(seed, k as u64, StreamId::Hessian);
    let g = oracles
        .first
        .sample(x, mu1, cfg.delta1, &mut g_rng)
        .map_err(|source| DriverError::Oracle { k, source })?;
    let h = oracles
        .second
        .sample(x, mu2, cfg.delta2, &mut h_rng)
        .map_err(|source| DriverError::Oracle { k, source })?;

    let model = CubicModel::new(g, h, sigma).map_err(|source| DriverError::Subproblem { k, source })?;
    let step =
        subproblem::solve(&model, cfg.eta).map_err(|source| DriverError::Subproblem { k, source })?;
    let s = step.s;
    let x_plus = x + &s;
    let model_dec = -model.value(&s);

    let (f_x, f_xplus) = sample_values(oracles, x, &x_plus, seed, k);
    let rho = if model_dec > 0.0 && s.iter().any(|&v| v != 0.0) {
        Some((f_x - f_xplus + 2.0 * cfg.eps_f_prime) / model_dec)
    } else {
        None
    };
    let successful = rho.is_some_and(|r| r >= cfg.theta);
    let next = if successful {
        SarcState {
            x: x_plus.clone(),
            sigma: (cfg.gamma * sigma).max(cfg.sigma_min),
            k: k + 1,
        }
    } else {
        SarcState {
            x: x.clone(),
            sigma: sigma / cfg.gamma,
            k: k + 1,
        }
    };

    let CubicModel { g, h, .. } = model;
    let grad_true = problem.gradient(x);
    let hess_true = problem.hessian(x);
    let phi_x = problem.value(x);
    let phi_xplus = problem.value(&x_plus);
    let grad_error = (&grad_true - &g).norm();
    let hess_error_on_step = ((&hess_true - &h) * &s).norm();
    let e_k = (f_x - phi_x).abs();
    let e_kplus = (f_xplus - phi_xplus).abs();
    let scale = accuracy_scale(cfg.mu, sigma, &s);
    let model_flag = grad_error <= oracles.first.kappa() * scale
        && hess_error_on_step <= oracles.second.kappa() * scale;
    let true_iter = model_flag && e_k + e_kplus <= 2.0 * cfg.eps_f_prime;

    let record = IterationRecord {
        k,
        x: x.clone(),
        sigma,
        step_status: step.status,
        f_x,
        f_xplus,
        rho,
        successful,
        model_dec,
        true_iter,
        model_flag,
        e_k,
        e_kplus,
        grad_error,
        hess_error_on_step,
        phi_x,
        phi_xplus,
        grad_norm_x: grad_true.norm(),
        grad_norm_xplus: problem.gradient(&x_plus).norm(),
        z_k: phi_x - problem.constants().lower_bound,
        g,
        h,
        s,
    };
    Ok((next, record))
}

/// Run the algorithm from the configured start until the stopping rule or
/// the iteration budget.
pub fn run(
    problem: &dyn Problem,
    oracles: &OracleSuite,
    cfg: &SarcConfig,
) -> Result<Trace, DriverError> {
    cfg.validate()?;
    if cfg.mu == 0.0 && !oracles.is_exact() {
        return Err(DriverError::ZeroMuWithNoisyOracles);
    }
    let x0 = match &cfg.x0 {
        Some(v) if v.len() != problem.dim() => {
            return Err(DriverError::StartDimension {
                expected: problem.dim(),
                got: v.len(),
            })
        }
        Some(v) => DVector::from_column_slice(v),
        None => problem.default_start(),
    };

    let mut state = SarcState {
        x: x0,
        sigma: cfg.sigma0,
        k: 0,
    };
    let mut records = Vec::new();
    let mut t_eps = None;
    while state.k < cfg.max_iterations {
        let (next, record) = sarc_step(&state, problem, oracles, cfg)?;
        let reached = record.grad_norm_xplus <= cfg.epsilon;
        if reached && t_eps.is_none() {
            t_eps = Some(record.k + 1);
        }
        records.push(record);
        state = next;
        if reached && cfg.stop_mode == StopMode::Omniscient {
            break;
        }
    }
    Ok(Trace {
        records,
        t_eps,
        final_z: problem.value(&state.x) - problem.constants().lower_bound,
        final_x: state.x,
        final_sigma: state.sigma,
    })
}

/// Recompute `(I_k, J_k)` for a record from ground truth.
pub fn classify_iteration(
    record: &IterationRecord,
    problem: &dyn Problem,
    cfg: &SarcConfig,
    constants: &TheoryConstants,
) -> (bool, bool) {
    let scale = accuracy_scale(cfg.mu, record.sigma, &record.s);
    let grad_error = (problem.gradient(&record.x) - &record.g).norm();
    let hess_error = ((problem.hessian(&record.x) - &record.h) * &record.s).norm();
    let model_flag =
        grad_error <= constants.kappa_g * scale && hess_error <= constants.kappa_h * scale;
    let e_k = (record.f_x - problem.value(&record.x)).abs();
    let e_kplus = (record.f_xplus - problem.value(&record.x_plus())).abs();
    (
        model_flag && e_k + e_kplus <= 2.0 * cfg.eps_f_prime,
        model_flag,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaCheck {
    /// `m_k(x_k) - m_k(x_k^+) >= sigma_k ||s_k||^3 / 6`.
    ModelDecrease,
    /// True with `sigma_k >= sigma_bar` implies success or `||s||^2 < mu/sigma`.
    LargeSigma,
    /// Step-norm lower bound on true iterations away from stationarity.
    StepLowerBound,
    /// Minimum improvement on true, successful iterations.
    MinImprovement,
    /// `Z_{k+1} <= Z_k + 2 eps_f' + e_k + e_k^+`.
    BoundedDamage,
}

impl LemmaCheck {
    pub const ALL: [LemmaCheck; 5] = [
        LemmaCheck::ModelDecrease,
        LemmaCheck::LargeSigma,
        LemmaCheck::StepLowerBound,
        LemmaCheck::MinImprovement,
        LemmaCheck::BoundedDamage,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub k: usize,
    pub check: LemmaCheck,
    /// The side that should be at least `rhs`.
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub violations: Vec<Violation>,
    /// Number of iterations on which each check's hypotheses held.
    pub checked: Vec<(LemmaCheck, usize)>,
    /// Iterations skipped because `x_k` or `x_k^+` left the box on which the
    /// problem's Lipschitz constants are certified.
    pub skipped_outside_box: usize,
}

impl LemmaReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

const LEMMA_SLACK: f64 = 1e-9;

/// `lhs >= rhs` up to `LEMMA_SLACK` relative to `scale`.
fn holds(lhs: f64, rhs: f64, scale: f64) -> bool {
    lhs >= rhs - LEMMA_SLACK * scale.abs().max(f64::MIN_POSITIVE)
}

/// Check the per-iteration guarantees on every record of `trace`.
pub fn assert_lemmas(
    trace: &Trace,
    problem: &dyn Problem,
    cfg: &SarcConfig,
    constants: &TheoryConstants,
) -> LemmaReport {
    let sigma_bar = constants.sigma_bar;
    let damping = (1.0 - cfg.theta / 3.0) * sigma_bar;
    let mu_condition = cfg.mu_condition_holds(sigma_bar);
    let test_box = problem.test_box();
    let mut report = LemmaReport::default();
    let mut counts = [0usize; 5];
    let flag = |report: &mut LemmaReport, k, check, lhs, rhs| {
        report.violations.push(Violation { k, check, lhs, rhs });
    };

    for r in &trace.records {
        let k = r.k;
        let s_norm = r.step_norm();
        let s_sq = s_norm * s_norm;
        let cubic = r.sigma * s_norm.powi(3);

        // (a)
        counts[0] += 1;
        let terms = r.s.dot(&r.g).abs() + 0.5 * r.s.dot(&(&r.h * &r.s)).abs() + cubic / 3.0;
        if !holds(r.model_dec, cubic / 6.0, terms) {
            flag(&mut report, k, LemmaCheck::ModelDecrease, r.model_dec, cubic / 6.0);
        }

        // (e)
        counts[4] += 1;
        let z_next = trace.z_after(k);
        let allowance = r.z_k + 2.0 * cfg.eps_f_prime + r.e_k + r.e_kplus;
        let scale = r.z_k.abs() + r.phi_x.abs() + r.phi_xplus.abs() + allowance.abs();
        if !holds(allowance, z_next, scale) {
            flag(&mut report, k, LemmaCheck::BoundedDamage, allowance, z_next);
        }

        if !r.true_iter {
            continue;
        }
        if !(test_box.contains(&r.x) && test_box.contains(&r.x_plus())) {
            report.skipped_outside_box += 1;
            continue;
        }
        let mu_over_sigma = cfg.mu / r.sigma;

        // (b)
        if r.sigma >= sigma_bar && s_norm > 0.0 {
            counts[1] += 1;
            let small_step = s_sq < mu_over_sigma * (1.0 + LEMMA_SLACK);
            let near_success = r
                .rho
                .is_some_and(|rho| holds(rho, cfg.theta, rho.abs().max(1.0)));
            if !r.successful && !small_step && !near_success {
                flag(
                    &mut report,
                    k,
                    LemmaCheck::LargeSigma,
                    r.rho.unwrap_or(f64::NAN),
                    cfg.theta,
                );
            }
        }

        // (c)
        if r.grad_norm_xplus > cfg.epsilon {
            counts[2] += 1;
            let lhs = s_sq.max(mu_over_sigma);
            let rhs = (1.0 - cfg.eta) * r.grad_norm_xplus / (r.sigma + damping);
            if !holds(lhs, rhs, lhs.max(rhs)) {
                flag(&mut report, k, LemmaCheck::StepLowerBound, lhs, rhs);
            }
        }

        // (d): x_{k+1} = x_k^+ on successful iterations
        if r.successful && mu_condition && r.grad_norm_xplus > cfg.epsilon {
            counts[3] += 1;
            let lhs = r.phi_x - r.phi_xplus;
            let rhs = cfg.theta / 6.0
                * (1.0 - cfg.eta).powf(1.5)
                * cfg.sigma_min
                * (r.sigma + damping).powf(-1.5)
                * r.grad_norm_xplus.powf(1.5)
                - r.e_k
                - r.e_kplus
                - 2.0 * cfg.eps_f_prime;
            let scale = r.phi_x.abs().max(r.phi_xplus.abs()).max(rhs.abs());
            if !holds(lhs, rhs, scale) {
                flag(&mut report, k, LemmaCheck::MinImprovement, lhs, rhs);
            }
        }
    }
    report.checked = LemmaCheck::ALL.iter().copied().zip(counts).collect();
    report
}
