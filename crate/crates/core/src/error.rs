use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Malformed delimited input. `row` is 1-based and counts the header.
    #[error("parse error at row {row}: {message}")]
    Parse { row: u64, message: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("run {run} failed: {source}")]
    Run {
        run: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(message: impl Into<String>) -> Error {
    Error::InvalidParameter(message.into())
}
