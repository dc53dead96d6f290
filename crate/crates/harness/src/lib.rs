//! Experiment harness for the SARC solver: single runs, Monte Carlo sweeps
//! over an epsilon grid, complexity-slope fits and plot data.

pub mod experiment;
pub mod slope;
pub mod spec;
pub mod svg;
pub mod trace_csv;

use std::path::{Path, PathBuf};

use sarc_core::analysis::AnalysisError;
use sarc_core::driver::DriverError;

pub use experiment::{run_montecarlo, run_single, EpsilonOutcome, MonteCarloOutcome, SingleOutcome};
pub use slope::{fit_slope, read_grid_summary, SlopeFit};
pub use spec::{ExperimentSpec, OracleSpec, TailSpec};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("slope fit: {0}")]
    Slope(String),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        HarnessError::Csv(e.to_string())
    }
}

/// Process exit codes of the `sarc` binary.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const INVALID_INPUT: i32 = 1;
    pub const VIOLATIONS: i32 = 2;
}
