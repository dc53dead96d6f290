//! Single runs and Monte Carlo sweeps.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sarc_core::analysis::{
    compare_with_bound, compute_constants, default_tail_parameters, tail_t_grid, trace_stats,
    BoundComparison, TheoryConstants, TraceSummary,
};
use sarc_core::driver::{assert_lemmas, run, LemmaReport, Trace};
use serde::Serialize;

use crate::spec::ExperimentSpec;
use crate::trace_csv::{format_float, write_trace};
use crate::{svg, HarnessError};

pub const WITHIN_THEORY: &str = "within-theory";
pub const OUTSIDE_THEORY: &str = "outside-theory";

pub fn theory_label(constants: &TheoryConstants) -> &'static str {
    if constants.within_theory {
        WITHIN_THEORY
    } else {
        OUTSIDE_THEORY
    }
}

#[derive(Debug)]
pub struct SingleOutcome {
    pub trace: Trace,
    pub constants: TheoryConstants,
    pub report: LemmaReport,
}

fn create_dir(path: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(path).map_err(|e| HarnessError::io(path, e))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text)
}

fn open(path: &Path) -> Result<fs::File, HarnessError> {
    fs::File::create(path).map_err(|e| HarnessError::io(path, e))
}

/// Run the solver once with `spec.config` and `seed`, writing `trace.csv`,
/// `constants.json` and `violations.json` into `out`.
pub fn run_single(spec: &ExperimentSpec, seed: u64, out: &Path) -> Result<SingleOutcome, HarnessError> {
    spec.validate()?;
    let problem = spec.build_problem()?;
    let oracles = spec.build_oracles(&problem)?;
    let cfg = spec.config_for(spec.config.epsilon, seed);
    let constants = compute_constants(&*problem, &oracles, &cfg, spec.c)?;
    let trace = run(&*problem, &oracles, &cfg)?;
    let report = assert_lemmas(&trace, &*problem, &cfg, &constants);

    create_dir(out)?;
    write_trace(open(&out.join("trace.csv"))?, &trace)?;
    write_json(&out.join("constants.json"), &constants)?;
    write_json(&out.join("violations.json"), &report)?;
    Ok(SingleOutcome {
        trace,
        constants,
        report,
    })
}

#[derive(Debug, Serialize)]
struct SeedViolations<'a> {
    seed: u64,
    report: &'a LemmaReport,
}

#[derive(Debug)]
pub struct EpsilonOutcome {
    pub epsilon: f64,
    pub label: &'static str,
    pub dir: PathBuf,
    pub constants: TheoryConstants,
    pub summary: TraceSummary,
    pub reports: Vec<LemmaReport>,
    /// `(p_hat, s)` used for the bound comparison, if any.
    pub tail_parameters: Option<(f64, f64)>,
    pub comparison: Vec<BoundComparison>,
}

impl EpsilonOutcome {
    pub fn violation_count(&self) -> usize {
        self.reports.iter().map(|r| r.violations.len()).sum()
    }

    /// Rows where the empirical CDF plus margin falls below the bound.
    pub fn bound_failures(&self) -> usize {
        self.comparison.iter().filter(|c| !c.consistent).count()
    }

    pub fn applicable_rows(&self) -> usize {
        self.comparison.iter().filter(|c| c.bound.is_some()).count()
    }
}

#[derive(Debug)]
pub struct MonteCarloOutcome {
    pub per_epsilon: Vec<EpsilonOutcome>,
}

impl MonteCarloOutcome {
    pub fn violation_count(&self) -> usize {
        self.per_epsilon.iter().map(EpsilonOutcome::violation_count).sum()
    }
}

/// Directory name for grid entry `index`.
pub fn epsilon_dir_name(index: usize, epsilon: f64) -> String {
    format!("eps_{index:02}_{epsilon:.3e}")
}

fn na_or<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

fn finite_or_na(v: f64) -> String {
    if v.is_finite() {
        format_float(v)
    } else {
        "NA".into()
    }
}

/// Run seeds `0..seed_count` at every grid epsilon on `workers` threads and
/// write per-epsilon summaries plus `grid_summary.csv` and `violations.json`
/// into `out`. Output bytes do not depend on `workers`.
pub fn run_montecarlo(spec: &ExperimentSpec, out: &Path, workers: usize) -> Result<MonteCarloOutcome, HarnessError> {
    spec.validate()?;
    if spec.seed_count < 2 {
        return Err(HarnessError::InvalidSpec(format!(
            "montecarlo needs seed_count >= 2, got {}",
            spec.seed_count
        )));
    }
    let problem = spec.build_problem()?;
    let oracles = spec.build_oracles(&problem)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;

    let jobs: Vec<(usize, u64)> = (0..spec.epsilon_grid.len())
        .flat_map(|i| (0..spec.seed_count as u64).map(move |s| (i, s)))
        .collect();
    let results: Vec<Result<(Trace, LemmaReport), HarnessError>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(i, seed)| {
                let cfg = spec.config_for(spec.epsilon_grid[i], seed);
                let constants = compute_constants(&*problem, &oracles, &cfg, spec.c)?;
                let trace = run(&*problem, &oracles, &cfg)?;
                let report = assert_lemmas(&trace, &*problem, &cfg, &constants);
                Ok((trace, report))
            })
            .collect()
    });
    let mut results = results.into_iter();

    create_dir(out)?;
    let mut per_epsilon = Vec::with_capacity(spec.epsilon_grid.len());
    for (i, &epsilon) in spec.epsilon_grid.iter().enumerate() {
        let mut traces = Vec::with_capacity(spec.seed_count);
        let mut reports = Vec::with_capacity(spec.seed_count);
        for _ in 0..spec.seed_count {
            let (trace, report) = results.next().expect("one result per job")?;
            traces.push(trace);
            reports.push(report);
        }
        let cfg = spec.config_for(epsilon, 0);
        let constants = compute_constants(&*problem, &oracles, &cfg, spec.c)?;
        let outcome = summarize_epsilon(spec, i, epsilon, constants, &traces, reports, out)?;
        per_epsilon.push(outcome);
    }

    write_grid_summary(&out.join("grid_summary.csv"), &per_epsilon)?;
    let all: Vec<_> = per_epsilon
        .iter()
        .map(|e| {
            let seeds: Vec<SeedViolations> = e
                .reports
                .iter()
                .enumerate()
                .filter(|(_, r)| !r.is_clean())
                .map(|(s, r)| SeedViolations { seed: s as u64, report: r })
                .collect();
            serde_json::json!({ "epsilon": e.epsilon, "seeds": seeds })
        })
        .collect();
    write_json(&out.join("violations.json"), &all)?;
    Ok(MonteCarloOutcome { per_epsilon })
}

fn summarize_epsilon(
    spec: &ExperimentSpec,
    index: usize,
    epsilon: f64,
    constants: TheoryConstants,
    traces: &[Trace],
    reports: Vec<LemmaReport>,
    out: &Path,
) -> Result<EpsilonOutcome, HarnessError> {
    let dir = out.join(epsilon_dir_name(index, epsilon));
    create_dir(&dir)?;
    let label = theory_label(&constants);
    let summary = trace_stats(traces, constants.sigma_bar);

    let mut w = csv::Writer::from_writer(open(&dir.join("summary.csv"))?);
    w.write_record([
        "seed",
        "T_eps",
        "iterations",
        "max_sigma",
        "max_sigma_over_sigma_bar",
        "true_freq",
        "violations",
        "label",
    ])?;
    for (seed, (st, rep)) in summary.per_trace.iter().zip(&reports).enumerate() {
        w.write_record([
            seed.to_string(),
            na_or(st.t_eps),
            st.iterations.to_string(),
            format_float(st.max_sigma),
            format_float(st.max_sigma_over_sigma_bar),
            format_float(st.true_freq),
            rep.violations.len().to_string(),
            label.to_string(),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::io(&dir, e))?;

    let mut w = csv::Writer::from_writer(open(&dir.join("cdf.csv"))?);
    w.write_record(["t", "cdf"])?;
    for t in 0..=summary.cdf.max_reached().unwrap_or(0) {
        w.write_record([t.to_string(), format_float(summary.cdf.at(t))])?;
    }
    w.flush().map_err(|e| HarnessError::io(&dir, e))?;

    let tail_parameters = match spec.tail {
        Some(t) => Some((t.p_hat, t.slack)),
        None => default_tail_parameters(&constants),
    };
    let comparison = match tail_parameters {
        Some((p_hat, s)) => {
            let grid = tail_t_grid(&summary.cdf, &constants, s, p_hat);
            compare_with_bound(&summary.cdf, &grid, s, p_hat, &constants)
        }
        None => Vec::new(),
    };
    let mut w = csv::Writer::from_writer(open(&dir.join("tail_bound.csv"))?);
    w.write_record(["t", "empirical", "bound", "margin", "consistent", "label"])?;
    for c in &comparison {
        w.write_record([
            c.t.to_string(),
            format_float(c.empirical),
            c.bound.map(format_float).unwrap_or_default(),
            format_float(c.margin),
            u8::from(c.consistent).to_string(),
            label.to_string(),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::io(&dir, e))?;

    write_file(
        &dir.join("cdf_vs_bound.svg"),
        svg::cdf_vs_bound(&comparison, &format!("{} n={} eps={epsilon:e} ({label})", spec.problem, spec.n)),
    )?;
    write_json(&dir.join("constants.json"), &constants)?;

    Ok(EpsilonOutcome {
        epsilon,
        label,
        dir,
        constants,
        summary,
        reports,
        tail_parameters,
        comparison,
    })
}

fn write_grid_summary(path: &Path, rows: &[EpsilonOutcome]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(open(path)?);
    w.write_record([
        "epsilon",
        "label",
        "eps_floor",
        "median_T_eps",
        "reached",
        "seeds",
        "pooled_true_freq",
        "p",
        "violations",
        "bound_rows",
        "bound_failures",
    ])?;
    for e in rows {
        let reached = e.summary.per_trace.iter().filter(|s| s.t_eps.is_some()).count();
        w.write_record([
            format_float(e.epsilon),
            e.label.to_string(),
            e.constants.eps_floor.map_or_else(|| "NA".into(), format_float),
            finite_or_na(e.summary.cdf.median()),
            reached.to_string(),
            e.summary.cdf.len().to_string(),
            format_float(e.summary.pooled_true_freq()),
            format_float(e.constants.p),
            e.violation_count().to_string(),
            e.applicable_rows().to_string(),
            e.bound_failures().to_string(),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}
