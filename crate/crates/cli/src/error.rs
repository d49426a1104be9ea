use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Failures surfaced by the runner, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("cache error: {0}")]
    Cache(String),

    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{0}")]
    Core(lfu_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Cache(_) => 3,
            CliError::Capacity(_) => 4,
            CliError::Io { .. } => 1,
            CliError::Core(e) => match e {
                lfu_core::Error::Domain(_)
                | lfu_core::Error::Format(_)
                | lfu_core::Error::Construction { .. }
                | lfu_core::Error::Precision(_) => 2,
                lfu_core::Error::Range { .. } => 3,
                lfu_core::Error::Capacity { .. } | lfu_core::Error::Resource { .. } => 4,
                lfu_core::Error::Io(_) => 1,
            },
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<lfu_core::Error> for CliError {
    fn from(e: lfu_core::Error) -> Self {
        match e {
            lfu_core::Error::Range { needed, limit } => CliError::Cache(format!(
                "cached table holds n <= {limit} but n = {needed} is needed; rerun `lfu sieve` with a larger limit"
            )),
            other => CliError::Core(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
