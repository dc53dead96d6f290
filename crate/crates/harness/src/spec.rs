//! Experiment specification files.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use sarc_core::driver::SarcConfig;
use sarc_core::oracles::{
    exact_suite_with, gaussian_first, gaussian_second, laplace_zeroth, subsampled_suite,
    OracleSuite,
};
use sarc_core::problems::{make_problem, Problem};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleSpec {
    Exact {
        #[serde(default = "one")]
        kappa_g: f64,
        #[serde(default = "one")]
        kappa_h: f64,
    },
    /// Laplace value noise with Gaussian gradient and Hessian noise.
    LaplaceGaussian {
        laplace_scale: f64,
        #[serde(default = "one")]
        kappa_g: f64,
        #[serde(default = "one")]
        kappa_h: f64,
    },
    Subsampled {
        #[serde(default = "one")]
        kappa_g: f64,
        #[serde(default = "one")]
        kappa_h: f64,
        #[serde(default)]
        calibration_seed: u64,
    },
}

fn one() -> f64 {
    1.0
}

/// Parameters of the tail-bound comparison; defaults are derived from the
/// constants when absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSpec {
    pub p_hat: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub problem: String,
    pub n: usize,
    pub oracle: OracleSpec,
    #[serde(default)]
    pub config: SarcConfig,
    pub epsilon_grid: Vec<f64>,
    pub seed_count: usize,
    pub output_dir: PathBuf,
    /// Universal constant in the sub-exponential parameter `K`.
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default)]
    pub tail: Option<TailSpec>,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let spec: Self =
            serde_json::from_str(text).map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let invalid = |msg: String| Err(HarnessError::InvalidSpec(msg));
        self.config
            .validate()
            .map_err(|e| HarnessError::InvalidSpec(e.to_string()))?;
        if self.epsilon_grid.is_empty() {
            return invalid("epsilon_grid must not be empty".into());
        }
        if self.epsilon_grid.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return invalid("epsilon_grid entries must be positive and finite".into());
        }
        if self.epsilon_grid.windows(2).any(|w| w[1] >= w[0]) {
            return invalid("epsilon_grid must be strictly decreasing".into());
        }
        if self.seed_count == 0 {
            return invalid("seed_count must be positive".into());
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return invalid(format!("c must be positive, got {}", self.c));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                invalid(format!("{name} must be positive, got {v}"))
            }
        };
        match &self.oracle {
            OracleSpec::Exact { kappa_g, kappa_h } | OracleSpec::Subsampled { kappa_g, kappa_h, .. } => {
                positive("kappa_g", *kappa_g)?;
                positive("kappa_h", *kappa_h)?;
            }
            OracleSpec::LaplaceGaussian {
                laplace_scale,
                kappa_g,
                kappa_h,
            } => {
                positive("laplace_scale", *laplace_scale)?;
                positive("kappa_g", *kappa_g)?;
                positive("kappa_h", *kappa_h)?;
            }
        }
        self.build_problem()?;
        Ok(())
    }

    pub fn build_problem(&self) -> Result<Arc<dyn Problem>, HarnessError> {
        make_problem(&self.problem, self.n).map_err(|e| HarnessError::InvalidSpec(e.to_string()))
    }

    pub fn build_oracles(&self, problem: &Arc<dyn Problem>) -> Result<OracleSuite, HarnessError> {
        let err = |e: sarc_core::oracles::OracleError| HarnessError::InvalidSpec(e.to_string());
        Ok(match &self.oracle {
            OracleSpec::Exact { kappa_g, kappa_h } => {
                exact_suite_with(problem.clone(), *kappa_g, *kappa_h)
            }
            OracleSpec::LaplaceGaussian {
                laplace_scale,
                kappa_g,
                kappa_h,
            } => OracleSuite {
                zeroth: Arc::new(laplace_zeroth(problem.clone(), *laplace_scale).map_err(err)?),
                first: Arc::new(gaussian_first(problem.clone(), *kappa_g).map_err(err)?),
                second: Arc::new(gaussian_second(problem.clone(), *kappa_h).map_err(err)?),
            },
            OracleSpec::Subsampled {
                kappa_g,
                kappa_h,
                calibration_seed,
            } => subsampled_suite(problem.clone(), *kappa_g, *kappa_h, *calibration_seed)
                .map_err(err)?,
        })
    }

    /// The solver configuration for one `(epsilon, seed)` pair.
    pub fn config_for(&self, epsilon: f64, seed: u64) -> SarcConfig {
        SarcConfig {
            epsilon,
            master_seed: seed,
            ..self.config.clone()
        }
    }
}
