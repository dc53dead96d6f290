use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sarc_core::analysis::compute_constants;
use sarc_harness::{exit_code, fit_slope, read_grid_summary, run_montecarlo, run_single, ExperimentSpec, HarnessError};

#[derive(Parser)]
#[command(name = "sarc", version, about = "Stochastic adaptive cubic regularization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seed and write its trace, constants and lemma report.
    Run {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every seed at every grid epsilon.
    Montecarlo {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the analysis constants for the spec's config as JSON.
    Constants {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Fit log median T_eps against log epsilon from a grid summary.
    Slope {
        #[arg(long)]
        summary: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Run { spec, seed, out } => {
            let spec = ExperimentSpec::load(&spec)?;
            let outcome = run_single(&spec, seed, &out)?;
            println!(
                "T_eps={} iterations={} violations={}",
                outcome.trace.t_eps.map_or_else(|| "NA".into(), |t| t.to_string()),
                outcome.trace.records.len(),
                outcome.report.violations.len()
            );
            Ok(if outcome.report.is_clean() {
                exit_code::SUCCESS
            } else {
                exit_code::VIOLATIONS
            })
        }
        Command::Montecarlo { spec, out, workers } => {
            let spec = ExperimentSpec::load(&spec)?;
            let workers = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let outcome = run_montecarlo(&spec, &out, workers)?;
            for e in &outcome.per_epsilon {
                println!(
                    "eps={:e} {} median_T={} violations={} bound_failures={}",
                    e.epsilon,
                    e.label,
                    e.summary.cdf.median(),
                    e.violation_count(),
                    e.bound_failures()
                );
            }
            Ok(if outcome.violation_count() == 0 {
                exit_code::SUCCESS
            } else {
                exit_code::VIOLATIONS
            })
        }
        Command::Constants { spec } => {
            let spec = ExperimentSpec::load(&spec)?;
            let problem = spec.build_problem()?;
            let oracles = spec.build_oracles(&problem)?;
            let constants = compute_constants(&*problem, &oracles, &spec.config, spec.c)?;
            println!("{}", serde_json::to_string_pretty(&constants)?);
            Ok(exit_code::SUCCESS)
        }
        Command::Slope { summary } => {
            let fit = fit_slope(&read_grid_summary(&summary)?)?;
            println!(
                "slope={} intercept={} residual={} points={}",
                fit.slope, fit.intercept, fit.residual, fit.points
            );
            Ok(exit_code::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code::INVALID_INPUT as u8)
        }
    }
}
