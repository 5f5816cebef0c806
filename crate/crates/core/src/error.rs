use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("underdetermined system: {equations} equations for {unknowns} unknowns")]
    Underdetermined { equations: usize, unknowns: usize },

    #[error("data contract violated: {0}")]
    DataContract(String),

    /// Malformed tabular input; `row` is the 1-based line number in the file.
    #[error("parse error at row {row}: {message}")]
    Parse { row: u64, message: String },

    /// Malformed run manifest; `line` is 1-based.
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("malformed model snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidArgument(message.into())
    }

    /// For csv write failures; read paths map their own errors with row numbers.
    pub(crate) fn from_csv(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::invalid(format!("csv: {other:?}")),
        }
    }

    pub(crate) fn dimension(context: &'static str, expected: usize, actual: usize) -> Self {
        Error::Dimension {
            context,
            expected,
            actual,
        }
    }
}
