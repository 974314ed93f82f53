use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, MfmError>;

#[derive(Debug, Error)]
pub enum MfmError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("coefficient series did not converge for t={t} after {terms} terms")]
    SeriesNotConverged { t: usize, terms: usize },

    #[error("state outside prior support: {0}")]
    OutsideSupport(String),

    #[error("all categorical weights are -inf")]
    DegenerateWeights,

    #[error("removing from empty sufficient statistics")]
    EmptyStats,

    #[error("empty trace")]
    EmptyTrace,

    #[error("log density of the reference is -inf at a draw from the target (x = {x})")]
    SupportViolation { x: f64 },

    #[error("{path}:{line}:{column}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(#[from] toml::de::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl MfmError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Self::InvalidConfig(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Self::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}
