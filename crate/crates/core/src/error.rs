use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the library. The variants map onto the three failure
/// families a caller cares about: bad input data, bad arguments, and numerical
/// solver failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{}:{line}: {message}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", file.display())]
    Io {
        file: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("row-count mismatch: {left} has {left_rows} rows, {right} has {right_rows}")]
    RowMismatch {
        left: String,
        left_rows: usize,
        right: String,
        right_rows: usize,
    },

    #[error("dimension mismatch: expected {expected} columns, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("solver failure: {0}")]
    Solver(String),
}

impl Error {
    /// True for errors caused by the numerical backend rather than the input.
    pub fn is_solver(&self) -> bool {
        matches!(self, Error::Solver(_))
    }

    /// Prefix the message with `ctx`, keeping the error family.
    pub fn context(&self, ctx: impl std::fmt::Display) -> Error {
        match self {
            Error::Solver(m) => Error::Solver(format!("{ctx}: {m}")),
            Error::InvalidArgument(m) => Error::InvalidArgument(format!("{ctx}: {m}")),
            other => Error::Data(format!("{ctx}: {other}")),
        }
    }

    /// True for errors that come from bad arguments rather than bad data.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidArgument(_))
    }
}
