use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{path}: line {line}: {reason}")]
    Parse { path: PathBuf, line: u64, reason: String },

    #[error("{path}: config {config} instance {instance}: value {value} outside [{kappa0}, {cap}]")]
    OutOfRange {
        path: PathBuf,
        config: usize,
        instance: usize,
        value: f64,
        kappa0: f64,
        cap: f64,
    },

    #[error("missing metadata sidecar {0}")]
    MissingMetadata(PathBuf),

    /// A censored cell was queried with a limit beyond the table cap.
    #[error("censored cell (config {config}, instance {instance}) queried with limit {limit} beyond cap {cap}")]
    Censored {
        config: usize,
        instance: usize,
        limit: f64,
        cap: f64,
    },

    /// Same as [`Error::Censored`] with the phase context attached by the estimator.
    #[error("phase {phase} (tau {tau}): config {config} hit a censored cell on instance {instance}: limit {limit} exceeds cap {cap}")]
    CensoredInPhase {
        phase: u32,
        tau: f64,
        config: usize,
        instance: usize,
        limit: f64,
        cap: f64,
    },

    #[error("config {config}: runtime quantile at delta {delta} falls on censored cells (cap {cap})")]
    CensoredQuantile { config: usize, delta: f64, cap: f64 },

    #[error("unknown configuration {0}")]
    UnknownConfig(usize),

    #[error("unknown instance {0}")]
    UnknownInstance(usize),

    #[error("empty instance list")]
    EmptyInstances,

    #[error("no configurations to search")]
    NoConfigs,

    #[error("search did not terminate within {0} phases")]
    MaxPhases(u32),

    #[error("solver exited with {status} on config {config}, instance {instance}")]
    SolverFailed {
        config: usize,
        instance: usize,
        status: String,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("process error: {0}")]
    Process(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
