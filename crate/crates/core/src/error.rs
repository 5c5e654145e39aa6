use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad input data or configuration.
    #[error("validation error: {0}")]
    Validation(String),

    /// Numerical failure inside a solver or an internal consistency check.
    #[error("solver error: {0}")]
    Solver(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn solver(msg: impl Into<String>) -> Self {
        Error::Solver(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for input/validation problems, 2 for numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Solver(_) => 2,
            _ => 1,
        }
    }
}
