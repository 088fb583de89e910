use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by game construction, dynamics and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dense tensor of {entries} entries (|A|^N = {num_actions}^{num_agents}) exceeds the cap of {cap} entries")]
    Capacity {
        num_agents: usize,
        num_actions: usize,
        entries: u128,
        cap: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "monotonicity violated at t = {t}: phi_tau(t) = {phi_before}, phi_tau(t+1) = {phi_after}, \
         jeffrey = {jeffrey}, required increase = {required}"
    )]
    MonotonicityViolation {
        t: usize,
        phi_before: f64,
        phi_after: f64,
        jeffrey: f64,
        required: f64,
    },

    #[error("instance too large for oracle: {0}")]
    OracleScale(String),

    #[error("malformed game file: {0}")]
    Format(String),

    #[error("malformed CSV {path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
