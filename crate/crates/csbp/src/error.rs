//! Crate-wide error type.

use thiserror::Error;

/// Failure modes shared by all modules.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a precondition (negative variance, alpha outside
    /// its interval, too few samples for a test, unsupported family for an
    /// operation).
    #[error("domain error: {0}")]
    Domain(String),

    /// A query fell outside the region a sampled object covers, such as
    /// evaluating a path beyond its horizon.
    #[error("range error: {0}")]
    Range(String),

    /// A numerical routine failed to converge to its tolerance.
    #[error("numerics error: {0}")]
    Numerics(String),

    /// Two routes that must agree did not; indicates a bug, not bad input.
    #[error("internal consistency error: {0}")]
    Inconsistency(String),

    /// A configuration file could not be parsed or described an invalid setup.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }
    pub fn numerics(msg: impl Into<String>) -> Self {
        Error::Numerics(msg.into())
    }
    pub fn inconsistency(msg: impl Into<String>) -> Self {
        Error::Inconsistency(msg.into())
    }
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
