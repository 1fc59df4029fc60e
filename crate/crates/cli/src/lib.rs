//! Experiment driver: a JSON config (optionally overridden by flags) selects
//! one experiment, which writes CSV files with a JSON metadata header line.
//!
//! Exit codes of the `transmute-lab` binary: 0 success, 2 invalid
//! configuration, 3 an achieved tolerance missed its target.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod experiments;
pub mod output;

pub use output::{emit_plotdata, Tolerance};

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => EXIT_VALIDATION,
            _ => 1,
        }
    }
}

impl From<transmutation::Error> for CliError {
    fn from(e: transmutation::Error) -> Self {
        Self::Validation(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    #[serde(alias = "certify")]
    SchemesCertify,
    #[serde(alias = "kernel")]
    KernelEval,
    Reconstruct,
    #[serde(alias = "obs-sweep")]
    ObservabilitySweep,
    Sharpness,
    Ingham,
    WeakObs,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Self::SchemesCertify => "schemes-certify",
            Self::KernelEval => "kernel-eval",
            Self::Reconstruct => "reconstruct",
            Self::ObservabilitySweep => "observability-sweep",
            Self::Sharpness => "sharpness",
            Self::Ingham => "ingham",
            Self::WeakObs => "weak-obs",
        }
    }
}

/// One experiment record. Unset fields take per-experiment defaults, and the
/// resolved values are echoed into every output file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub scheme: Option<String>,
    pub tau: Option<f64>,
    pub tau_ladder: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub eps: Option<f64>,
    #[serde(rename = "T")]
    pub t_final: Option<f64>,
    #[serde(rename = "T0")]
    pub t0: Option<f64>,
    /// spectrum truncation `N`
    pub modes: Option<i64>,
    pub x0: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    /// Monte-Carlo trials for the operator-norm check
    pub trials: Option<usize>,
    /// grid size for hypothesis certification
    pub samples: Option<usize>,
    /// forward/reverse truncation margin in multiples of `eps`
    pub window_margin: Option<f64>,
    /// heat-map resolution per axis
    pub grid: Option<usize>,
    /// off-cone point `(t, s)` for the decay ladder
    pub point: Option<[f64; 2]>,
    /// radius of the ball around `x0` for the packet mass
    pub radius: Option<f64>,
    pub liouville_r: Option<f64>,
    pub liouville_j: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overridden_by(self, other: ExperimentConfig) -> Self {
        macro_rules! pick {
            ($($f:ident),*) => { Self { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            experiment, scheme, tau, tau_ladder, delta, eps, t_final, t0, modes, x0, out, seed, trials,
            samples, window_margin, grid, point, radius, liouville_r, liouville_j
        )
    }
}

/// What an experiment produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub experiment: Experiment,
    pub files: Vec<PathBuf>,
    pub tolerances: Vec<Tolerance>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.tolerances.iter().all(|t| t.passed)
    }
}

/// Validates and runs the configured experiment, writing its files under `out`.
pub fn run(config: &ExperimentConfig) -> Result<RunReport, CliError> {
    let experiment = config
        .experiment
        .ok_or_else(|| CliError::Validation("no experiment selected".into()))?;
    let out = config.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    experiments::dispatch(experiment, config, &out)
}
