//! Crate-wide error type.
//!
//! Errors are grouped into three broad categories so that callers (notably
//! the command-line driver) can map failures onto coarse exit classes:
//!
//! * [`Error::Config`] — invalid parameters or domain violations detected
//!   before any data is touched (a negative intensity, a weight outside
//!   `[0, 1]`, an unknown column name, ...).
//! * [`Error::Data`] — malformed or inconsistent input data (CSV parse
//!   failures, duplicate dates, gaps too long to fill, misaligned series).
//! * [`Error::Estimation`] — a well-posed problem that the numerics could
//!   not complete (rank-deficient design, solver non-convergence, degenerate
//!   samples).

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid parameter or domain violation.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed, missing, or inconsistent input data.
    #[error("data error: {0}")]
    Data(String),

    /// An estimator or solver failed on otherwise valid input.
    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Convenience constructor for [`Error::Config`].
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Convenience constructor for [`Error::Data`].
    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    /// Convenience constructor for [`Error::Estimation`].
    pub fn estimation(msg: impl Into<String>) -> Self {
        Error::Estimation(msg.into())
    }
}
