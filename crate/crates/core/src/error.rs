//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by any part of the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{op}: shape mismatch {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("{op}: length mismatch {left} vs {right}")]
    LengthMismatch {
        op: &'static str,
        left: usize,
        right: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Training produced a non-finite value. Divergence aborts the run
    /// loudly, carrying the offending iteration.
    #[error("divergence at iteration {iteration}: {what}")]
    Divergence { iteration: u64, what: String },

    #[error("iteration budget exhausted: t={t} >= total={total}")]
    IterationBudget { t: u64, total: u64 },

    /// Non-finite value outside a training-iteration context; the trainer
    /// converts this into [`Error::Divergence`] with the iteration attached.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// A state the public API is supposed to make unreachable.
    #[error("internal logic error: {0}")]
    Internal(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {detail}")]
    MalformedFile { path: PathBuf, detail: String },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
