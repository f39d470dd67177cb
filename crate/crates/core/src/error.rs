//! Error type shared by every module.

use thiserror::Error;

/// Failure modes of the simulator, checkers and harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A run would exceed the configured numeric or memory capacity.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// A constant schedule underflows double precision.
    #[error("scale infeasible: {0}")]
    ScaleInfeasible(String),
    /// A fixture cannot be realized for the requested parameters.
    #[error("infeasible fixture: {0}")]
    Infeasible(String),
    /// Malformed input file.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    /// File-level schema mismatch.
    #[error("schema version mismatch: expected {expected}, found {found}")]
    Schema { expected: String, found: String },
    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
