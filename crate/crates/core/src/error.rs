use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("point {point:?} lies outside the unit cube")]
    Domain { point: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid representation: {0}")]
    InvalidRep(String),

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("grid resolution {resolution} too coarse: {reason}")]
    Resolution { resolution: usize, reason: String },

    #[error("no acceptable sign pattern after {attempts} attempts (best moment {best_moment:.6e}, threshold {threshold:.6e})")]
    Exhausted {
        attempts: usize,
        best_moment: f64,
        threshold: f64,
    },

    #[error("value out of range: {0}")]
    Range(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("class membership violated: {0}")]
    Membership(String),

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed document: {0}")]
    Parse(String),
}

impl LabError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<serde_json::Error> for LabError {
    fn from(e: serde_json::Error) -> Self {
        LabError::Parse(e.to_string())
    }
}
