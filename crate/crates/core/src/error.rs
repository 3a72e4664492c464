use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Parameter combination outside the physically admissible set.
    #[error("inadmissible parameters: {0}")]
    Admissibility(String),

    #[error("invalid geometry: {0}")]
    Geometry(String),

    /// A field value became non-finite during time stepping.
    #[error("solver became unstable at step {step} (t = {time:e} s)")]
    Instability { step: usize, time: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("sampler initialization failed: {0}")]
    Initialization(String),

    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data in {path}: {message}")]
    Data { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for user and configuration errors, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Admissibility(_) | Error::Instability { .. } => 2,
            _ => 1,
        }
    }
}
