//! Constants and probability bounds for the iteration count, and empirical
//! summaries of traces to compare them against.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::driver::{SarcConfig, Trace};
use crate::oracles::OracleSuite;
use crate::problems::Problem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("eps_f_prime ({eps_f_prime}) must exceed the oracle's eps_f ({eps_f})")]
    BiasTooSmall { eps_f: f64, eps_f_prime: f64 },
    #[error("reliability p = {0} does not exceed 1/2")]
    ReliabilityTooLow(f64),
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), AnalysisError> {
    if cond {
        Ok(())
    } else {
        Err(AnalysisError::InvalidInput(msg()))
    }
}

/// `(2 kappa_g + kappa_H + L + L_H) / (1 - theta/3)`.
pub fn sigma_bar(kappa_g: f64, kappa_h: f64, l: f64, l_h: f64, theta: f64) -> Result<f64, AnalysisError> {
    require(theta > 0.0 && theta < 1.0, || format!("theta must lie in (0, 1), got {theta}"))?;
    let parts = [kappa_g, kappa_h, l, l_h];
    require(parts.iter().all(|v| *v >= 0.0 && v.is_finite()), || {
        "kappa_g, kappa_H, L and L_H must be finite and non-negative".into()
    })?;
    let numerator = 2.0 * kappa_g + kappa_h + l + l_h;
    require(numerator > 0.0, || "kappa_g, kappa_H, L and L_H are all zero".into())?;
    Ok(numerator / (1.0 - theta / 3.0))
}

/// The two lower bounds on attainable accuracy: the `mu` term and the
/// value-noise term.
pub fn eps_floor_terms(
    mu: f64,
    eta: f64,
    theta: f64,
    sigma_min: f64,
    sigma_bar: f64,
    p: f64,
    eps_f_prime: f64,
) -> Result<(f64, f64), AnalysisError> {
    require(eta > 0.0 && eta < 1.0, || format!("eta must lie in (0, 1), got {eta}"))?;
    require(theta > 0.0 && theta < 1.0, || format!("theta must lie in (0, 1), got {theta}"))?;
    if !(p > 0.5) {
        return Err(AnalysisError::ReliabilityTooLow(p));
    }
    let mu_term = (1.0 + (1.0 - theta / 3.0) * sigma_bar / sigma_min) * mu / (1.0 - eta);
    let noise_term = (2.0 - theta / 3.0) * sigma_bar / (1.0 - eta)
        * (24.0 * eps_f_prime / ((p - 0.5) * theta * sigma_min)).powf(2.0 / 3.0);
    Ok((mu_term, noise_term))
}

/// Smallest `epsilon` (exclusive) covered by the complexity guarantee.
pub fn eps_floor(
    mu: f64,
    eta: f64,
    theta: f64,
    sigma_min: f64,
    sigma_bar: f64,
    p: f64,
    eps_f_prime: f64,
) -> Result<f64, AnalysisError> {
    let (a, b) = eps_floor_terms(mu, eta, theta, sigma_min, sigma_bar, p, eps_f_prime)?;
    Ok(a.max(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reliability {
    pub k: f64,
    pub u: f64,
    pub p: f64,
    pub exceeds_half: bool,
}

/// `K = C max{1/lambda, ln 2 / a}` (with `K = C / lambda` when `a = 0`),
/// `u = eps_f' - eps_f` and
/// `p = 1 - delta1 - delta2 - exp(-min{u^2 / 2K^2, u / 2K})`.
pub fn reliability_p(
    delta1: f64,
    delta2: f64,
    eps_f: f64,
    eps_f_prime: f64,
    lambda: f64,
    a: f64,
    c: f64,
) -> Result<Reliability, AnalysisError> {
    require(lambda > 0.0 && lambda.is_finite(), || format!("lambda must be positive, got {lambda}"))?;
    require(a >= 0.0 && a.is_finite(), || format!("a must be non-negative, got {a}"))?;
    require(c > 0.0 && c.is_finite(), || format!("C must be positive, got {c}"))?;
    if !(eps_f_prime > eps_f) {
        return Err(AnalysisError::BiasTooSmall { eps_f, eps_f_prime });
    }
    let k = if a == 0.0 {
        c / lambda
    } else {
        c * (1.0 / lambda).max(std::f64::consts::LN_2 / a)
    };
    let u = eps_f_prime - eps_f;
    let ratio = u / k;
    let exponent = (0.5 * ratio * ratio).min(0.5 * ratio);
    let p = 1.0 - delta1 - delta2 - (-exponent).exp();
    Ok(Reliability {
        k,
        u,
        p,
        exceeds_half: p > 0.5,
    })
}

/// `(theta/6) (1-eta)^{3/2} sigma_min (1/alpha + (1-theta/3)/alpha_bar)^{-3/2} epsilon^{3/2}`.
pub fn h_of_alpha(
    alpha: f64,
    theta: f64,
    eta: f64,
    sigma_min: f64,
    alpha_bar: f64,
    epsilon: f64,
) -> Result<f64, AnalysisError> {
    require(alpha > 0.0, || format!("alpha must be positive, got {alpha}"))?;
    require(alpha_bar > 0.0, || format!("alpha_bar must be positive, got {alpha_bar}"))?;
    let denom = 1.0 / alpha + (1.0 - theta / 3.0) / alpha_bar;
    Ok(theta / 6.0 * (1.0 - eta).powf(1.5) * sigma_min * denom.powf(-1.5) * epsilon.powf(1.5))
}

/// `c1 = (theta/6) (1-eta)^{3/2} sigma_min / ((2 - theta/3) sigma_bar)^{3/2}`.
pub fn c1(theta: f64, eta: f64, sigma_min: f64, sigma_bar: f64) -> f64 {
    theta / 6.0 * (1.0 - eta).powf(1.5) * sigma_min / ((2.0 - theta / 3.0) * sigma_bar).powf(1.5)
}

/// `R = (phi(x0) - phi*) / (c1 eps^{3/2}) + max{-(ln alpha0 + ln sigma_bar) / (2 ln gamma), 0}`.
pub fn r_value(phi_gap: f64, c1: f64, epsilon: f64, alpha0: f64, sigma_bar: f64, gamma: f64) -> f64 {
    let walk = -(alpha0.ln() + sigma_bar.ln()) / (2.0 * gamma.ln());
    phi_gap / (c1 * epsilon.powf(1.5)) + walk.max(0.0)
}

/// Right-hand side of the tail bound without precondition checks:
/// `1 - exp(-(p - p_hat)^2 t / 2p^2) - exp(-min{s^2 t / 8K^2, s t / 4K})`.
pub fn tail_bound_value(t: f64, s_slack: f64, p_hat: f64, p: f64, k: f64) -> f64 {
    let walk = (-(p - p_hat).powi(2) / (2.0 * p * p) * t).exp();
    let noise_rate = (s_slack * s_slack * t / (8.0 * k * k)).min(s_slack * t / (4.0 * k));
    1.0 - walk - (-noise_rate).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum Inapplicable {
    NegativeSlack,
    ReliabilityTooLow { p: f64 },
    PHatTooSmall { lower: f64 },
    PHatNotBelowP { p: f64 },
    TooFewIterations { min_t: f64 },
}

impl std::fmt::Display for Inapplicable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Inapplicable::NegativeSlack => write!(f, "s >= 0 violated"),
            Inapplicable::ReliabilityTooLow { p } => write!(f, "p > 1/2 violated (p = {p})"),
            Inapplicable::PHatTooSmall { lower } => {
                write!(f, "p_hat > 1/2 + (4 eps_f' + s)/(c1 eps^1.5) = {lower} violated")
            }
            Inapplicable::PHatNotBelowP { p } => write!(f, "p_hat < p violated (p = {p})"),
            Inapplicable::TooFewIterations { min_t } => {
                write!(f, "t >= R/(p_hat - 1/2 - (4 eps_f' + s)/(c1 eps^1.5)) = {min_t} violated")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailBound {
    Applicable(f64),
    Inapplicable(Inapplicable),
}

impl TailBound {
    pub fn value(&self) -> Option<f64> {
        match self {
            TailBound::Applicable(v) => Some(*v),
            TailBound::Inapplicable(_) => None,
        }
    }
}

/// Lower bound on `P(T_eps <= t + 1)` when its preconditions hold.
pub fn tail_bound(
    t: f64,
    s_slack: f64,
    p_hat: f64,
    constants: &TheoryConstants,
    epsilon: f64,
    eps_f_prime: f64,
) -> TailBound {
    use Inapplicable::*;
    let p = constants.p;
    if !(s_slack >= 0.0) {
        return TailBound::Inapplicable(NegativeSlack);
    }
    if !(p > 0.5) {
        return TailBound::Inapplicable(ReliabilityTooLow { p });
    }
    let progress = constants.c1 * epsilon.powf(1.5);
    let lower = 0.5 + (4.0 * eps_f_prime + s_slack) / progress;
    if !(p_hat > lower) {
        return TailBound::Inapplicable(PHatTooSmall { lower });
    }
    if !(p_hat < p) {
        return TailBound::Inapplicable(PHatNotBelowP { p });
    }
    let r = r_value(
        constants.phi_gap,
        constants.c1,
        epsilon,
        1.0 / constants.sigma0,
        constants.sigma_bar,
        constants.gamma,
    );
    let min_t = r / (p_hat - lower);
    if !(t >= min_t) {
        return TailBound::Inapplicable(TooFewIterations { min_t });
    }
    TailBound::Applicable(tail_bound_value(t, s_slack, p_hat, p, constants.k))
}

/// Every constant of the complexity analysis for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub sigma_bar: f64,
    pub alpha_bar: f64,
    pub kappa_g: f64,
    pub kappa_h: f64,
    pub lipschitz_gradient: f64,
    pub lipschitz_hessian: f64,
    pub eps_f: f64,
    pub lambda: f64,
    pub a: f64,
    /// Universal-constant knob in `K`.
    pub c: f64,
    pub k: f64,
    pub u: f64,
    pub p: f64,
    pub p_exceeds_half: bool,
    /// `None` when `p <= 1/2`, in which case no accuracy is covered.
    pub eps_floor: Option<f64>,
    pub eps_floor_mu_term: f64,
    pub epsilon: f64,
    pub eps_f_prime: f64,
    pub mu: f64,
    /// `epsilon > eps_floor`.
    pub within_theory: bool,
    pub mu_condition: bool,
    pub c1: f64,
    pub r: f64,
    pub h_at_alpha_bar: f64,
    pub phi_gap: f64,
    pub sigma0: f64,
    pub gamma: f64,
}

/// Evaluate the constants for `cfg` with the problem's Lipschitz constants
/// and the oracles' declared parameters.
pub fn compute_constants(
    problem: &dyn Problem,
    oracles: &OracleSuite,
    cfg: &SarcConfig,
    c: f64,
) -> Result<TheoryConstants, AnalysisError> {
    let pc = problem.constants();
    let zeroth = oracles.zeroth.params();
    let (kappa_g, kappa_h) = (oracles.first.kappa(), oracles.second.kappa());
    let sigma_bar = sigma_bar(kappa_g, kappa_h, pc.lipschitz_gradient, pc.lipschitz_hessian, cfg.theta)?;
    let rel = reliability_p(
        cfg.delta1,
        cfg.delta2,
        zeroth.eps_f,
        cfg.eps_f_prime,
        zeroth.lambda,
        zeroth.a,
        c,
    )?;
    let terms = eps_floor_terms(
        cfg.mu,
        cfg.eta,
        cfg.theta,
        cfg.sigma_min,
        sigma_bar,
        rel.p,
        cfg.eps_f_prime,
    );
    let (eps_floor, mu_term) = match terms {
        Ok((a, b)) => (Some(a.max(b)), a),
        Err(AnalysisError::ReliabilityTooLow(_)) => (
            None,
            (1.0 + (1.0 - cfg.theta / 3.0) * sigma_bar / cfg.sigma_min) * cfg.mu / (1.0 - cfg.eta),
        ),
        Err(e) => return Err(e),
    };
    let x0 = cfg
        .x0
        .as_ref()
        .map_or_else(|| problem.default_start(), |v| nalgebra::DVector::from_column_slice(v));
    if x0.len() != problem.dim() {
        return Err(AnalysisError::InvalidInput(format!(
            "x0 has dimension {}, problem has dimension {}",
            x0.len(),
            problem.dim()
        )));
    }
    let phi_gap = problem.value(&x0) - pc.lower_bound;
    let c1 = c1(cfg.theta, cfg.eta, cfg.sigma_min, sigma_bar);
    let alpha_bar = 1.0 / sigma_bar;
    Ok(TheoryConstants {
        sigma_bar,
        alpha_bar,
        kappa_g,
        kappa_h,
        lipschitz_gradient: pc.lipschitz_gradient,
        lipschitz_hessian: pc.lipschitz_hessian,
        eps_f: zeroth.eps_f,
        lambda: zeroth.lambda,
        a: zeroth.a,
        c,
        k: rel.k,
        u: rel.u,
        p: rel.p,
        p_exceeds_half: rel.exceeds_half,
        eps_floor,
        eps_floor_mu_term: mu_term,
        epsilon: cfg.epsilon,
        eps_f_prime: cfg.eps_f_prime,
        mu: cfg.mu,
        within_theory: eps_floor.is_some_and(|f| cfg.epsilon > f),
        mu_condition: cfg.mu_condition_holds(sigma_bar),
        c1,
        r: r_value(phi_gap, c1, cfg.epsilon, 1.0 / cfg.sigma0, sigma_bar, cfg.gamma),
        h_at_alpha_bar: h_of_alpha(alpha_bar, cfg.theta, cfg.eta, cfg.sigma_min, alpha_bar, cfg.epsilon)?,
        phi_gap,
        sigma0: cfg.sigma0,
        gamma: cfg.gamma,
    })
}

/// Slack `s = K` and `p_hat` halfway into its admissible interval, or `None`
/// when the interval is empty.
pub fn default_tail_parameters(constants: &TheoryConstants) -> Option<(f64, f64)> {
    let s = constants.k;
    let lower = 0.5 + (4.0 * constants.eps_f_prime + s) / (constants.c1 * constants.epsilon.powf(1.5));
    (constants.p > lower).then_some((0.5 * (lower + constants.p), s))
}

/// `min{k : norms[k] <= epsilon} + 1`.
pub fn stopping_time(trial_grad_norms: &[f64], epsilon: f64) -> Option<usize> {
    trial_grad_norms.iter().position(|&g| g <= epsilon).map(|k| k + 1)
}

/// Empirical distribution of stopping times; unreached runs count as larger
/// than every `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<usize>,
    total: usize,
}

impl EmpiricalCdf {
    pub fn new(times: &[Option<usize>]) -> Self {
        let mut sorted: Vec<usize> = times.iter().flatten().copied().collect();
        sorted.sort_unstable();
        Self {
            sorted,
            total: times.len(),
        }
    }

    /// Fraction of runs with `T_eps <= t`.
    pub fn at(&self, t: usize) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.sorted.partition_point(|&v| v <= t) as f64 / self.total as f64
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Largest observed stopping time.
    pub fn max_reached(&self) -> Option<usize> {
        self.sorted.last().copied()
    }

    /// Median stopping time, infinite when the middle runs did not stop.
    pub fn median(&self) -> f64 {
        if self.total == 0 {
            return f64::NAN;
        }
        let nth = |i: usize| self.sorted.get(i).map_or(f64::INFINITY, |&v| v as f64);
        if self.total % 2 == 1 {
            nth(self.total / 2)
        } else {
            0.5 * (nth(self.total / 2 - 1) + nth(self.total / 2))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub t_eps: Option<usize>,
    pub iterations: usize,
    pub max_sigma: f64,
    pub max_sigma_over_sigma_bar: f64,
    pub true_freq: f64,
    /// Mean of `Z_k - Z_{k+1}` over true, successful iterations.
    pub mean_z_decrease_true_success: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSummary {
    pub per_trace: Vec<TraceStats>,
    pub cdf: EmpiricalCdf,
    pub true_iterations: usize,
    pub total_iterations: usize,
}

impl TraceSummary {
    pub fn pooled_true_freq(&self) -> f64 {
        self.true_iterations as f64 / self.total_iterations.max(1) as f64
    }
}

pub fn trace_stats(traces: &[Trace], sigma_bar: f64) -> TraceSummary {
    let mut true_iterations = 0;
    let mut total_iterations = 0;
    let per_trace = traces
        .iter()
        .map(|tr| {
            let n = tr.records.len();
            let trues = tr.records.iter().filter(|r| r.true_iter).count();
            true_iterations += trues;
            total_iterations += n;
            let max_sigma = tr
                .records
                .iter()
                .map(|r| r.sigma)
                .chain(std::iter::once(tr.final_sigma))
                .fold(f64::NEG_INFINITY, f64::max);
            let decreases: Vec<f64> = tr
                .records
                .iter()
                .filter(|r| r.true_iter && r.successful)
                .map(|r| r.z_k - tr.z_after(r.k))
                .collect();
            TraceStats {
                t_eps: tr.t_eps,
                iterations: n,
                max_sigma,
                max_sigma_over_sigma_bar: max_sigma / sigma_bar,
                true_freq: if n == 0 { 0.0 } else { trues as f64 / n as f64 },
                mean_z_decrease_true_success: (!decreases.is_empty())
                    .then(|| decreases.iter().sum::<f64>() / decreases.len() as f64),
            }
        })
        .collect();
    let times: Vec<Option<usize>> = traces.iter().map(|t| t.t_eps).collect();
    TraceSummary {
        per_trace,
        cdf: EmpiricalCdf::new(&times),
        true_iterations,
        total_iterations,
    }
}

/// `3 sqrt(q (1 - q) / n)`.
pub fn binomial_margin(q: f64, n: usize) -> f64 {
    3.0 * (q.clamp(0.0, 1.0) * (1.0 - q.clamp(0.0, 1.0)) / n.max(1) as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundComparison {
    pub t: usize,
    /// Empirical `P(T_eps <= t + 1)`.
    pub empirical: f64,
    pub bound: Option<f64>,
    pub margin: f64,
    /// `empirical + margin >= bound`, trivially true where inapplicable.
    pub consistent: bool,
}

/// Compare the empirical CDF against the tail bound on `t_grid`.
pub fn compare_with_bound(
    cdf: &EmpiricalCdf,
    t_grid: &[usize],
    s_slack: f64,
    p_hat: f64,
    constants: &TheoryConstants,
) -> Vec<BoundComparison> {
    t_grid
        .iter()
        .map(|&t| {
            let empirical = cdf.at(t + 1);
            let bound = tail_bound(
                t as f64,
                s_slack,
                p_hat,
                constants,
                constants.epsilon,
                constants.eps_f_prime,
            )
            .value();
            let margin = bound.map_or(0.0, |b| binomial_margin(b, cdf.len()));
            BoundComparison {
                t,
                empirical,
                bound,
                margin,
                consistent: bound.is_none_or(|b| empirical + margin >= b),
            }
        })
        .collect()
}

/// Grid of `t` values covering the observed stopping times and the region
/// where the tail bound applies.
pub fn tail_t_grid(cdf: &EmpiricalCdf, constants: &TheoryConstants, s_slack: f64, p_hat: f64) -> Vec<usize> {
    let mut grid: Vec<usize> = (0..=cdf.max_reached().unwrap_or(0)).collect();
    let first = match tail_bound(0.0, s_slack, p_hat, constants, constants.epsilon, constants.eps_f_prime) {
        TailBound::Inapplicable(Inapplicable::TooFewIterations { min_t }) => Some(min_t.ceil()),
        TailBound::Applicable(_) => Some(0.0),
        TailBound::Inapplicable(_) => None,
    };
    if let Some(start) = first.filter(|v| v.is_finite() && *v < 1e15) {
        let start = start.max(1.0);
        for i in 0..=20 {
            grid.push((start * 10f64.powf(i as f64 / 10.0)).ceil() as usize);
        }
    }
    grid.sort_unstable();
    grid.dedup();
    grid
}
