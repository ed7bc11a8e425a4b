use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the simulation and reconstruction pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("non-finite value at entry {index}")]
    NonFinite { index: usize },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("blow-up at step {step}: non-finite state entry")]
    BlowUp { step: usize },

    #[error("step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate dataset: {0}")]
    Degenerate(String),

    #[error("zero-norm snapshot column {column}")]
    ZeroNormColumn { column: usize },

    #[error("decomposition failed in block {block}: {reason}")]
    Decomposition { block: usize, reason: String },

    #[error("snapshot index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("partition count {n} exceeds the cap {n_max}; best attempt: {best}")]
    PartitionCapExceeded {
        n: usize,
        n_max: usize,
        best: String,
    },

    #[error("bad dataset file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
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
