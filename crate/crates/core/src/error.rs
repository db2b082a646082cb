//! Crate-wide error type with stable machine-readable codes.

use thiserror::Error;

/// Errors raised by toolkit operations.
///
/// Every variant maps to a stable code (see [`Error::code`]) that the CLI
/// prints as `error: <code>` so scripts can dispatch on failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("invalid colour: {0}")]
    InvalidColour(String),

    #[error("degenerate pair: {0}")]
    DegeneratePair(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("slice failure: {0}")]
    SliceFailure(String),

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("structural error: {0}")]
    Structural(String),

    #[error("divisibility error: {0}")]
    Divisibility(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("no shape: {0}")]
    NoShape(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable code for CLI consumers.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidSize(_) => "invalid-size",
            Error::SizeLimit(_) => "size-limit",
            Error::InvalidColour(_) => "invalid-colour",
            Error::DegeneratePair(_) => "degenerate-pair",
            Error::Precondition(_) => "precondition",
            Error::SliceFailure(_) => "slice-failure",
            Error::Partition(_) => "partition",
            Error::Structural(_) => "structural",
            Error::Divisibility(_) => "divisibility",
            Error::Parameter(_) => "parameter",
            Error::NoShape(_) => "no-shape",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
