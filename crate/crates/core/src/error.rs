use std::io;

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A request reads past the end of a table.
    #[error("range error: need n up to {needed}, table holds {limit}")]
    Range { needed: u64, limit: u64 },

    /// A table or set larger than the configured cap was requested.
    #[error("capacity error: {what} of {requested} exceeds cap {cap}")]
    Capacity {
        what: &'static str,
        requested: u64,
        cap: u64,
    },

    /// A grid or scan would exceed its evaluation budget.
    #[error("resource error: {needed} grid points exceed budget {budget}; use a larger tolerance")]
    Resource { needed: u64, budget: u64 },

    /// A Cantor specification cannot be realized at the named level.
    #[error("construction error at level {level}: {reason}")]
    Construction { level: usize, reason: String },

    /// Floating point cannot represent the requested quantity faithfully.
    #[error("precision error: {0}")]
    Precision(String),

    /// A cache file or text input is malformed.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
