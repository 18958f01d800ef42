use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular matrix: pivot magnitude {pivot:e} below tolerance")]
    SingularMatrix { pivot: f64 },

    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("index {index} out of range (< {bound})")]
    IndexOutOfRange { index: usize, bound: usize },

    #[error("replay buffer holds {len} records, {requested} requested")]
    BufferTooSmall { len: usize, requested: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("unknown configuration key: {0}")]
    UnknownKey(String),

    #[error("log is empty")]
    EmptyLog,

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code, one per error family.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SingularMatrix { .. } | Error::NoConvergence { .. } | Error::NonFinite(_) => 3,
            Error::DimensionMismatch { .. }
            | Error::InvalidModel(_)
            | Error::IndexOutOfRange { .. }
            | Error::BufferTooSmall { .. } => 4,
            Error::Parse { .. } | Error::Validation(_) | Error::UnknownKey(_) => 2,
            Error::EmptyLog | Error::Io(_) | Error::Csv(_) => 5,
        }
    }
}
