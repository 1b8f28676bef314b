use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("cannot parse {path}: {source}")]
    Toml {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Core(#[from] relaysec::Error),

    #[error("{failed} of {total} solves failed, above the allowed fraction {allowed}")]
    FailureBudget {
        failed: usize,
        total: usize,
        allowed: f64,
    },
}

impl HarnessError {
    /// Process exit code: 1 for configuration and I/O problems, 2 for solver
    /// trouble.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::FailureBudget { .. } => 2,
            HarnessError::Core(relaysec::Error::NoConvergence { .. }) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
