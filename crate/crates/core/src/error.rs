use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A step-size or rate parameter falls outside the domain where the
    /// iteration (or its certificate) is defined.
    #[error("parameter domain violated: {0}")]
    ParameterDomain(String),

    #[error("metric is not positive semidefinite: <y, Gy> = {value:e}")]
    Metric { value: f64 },

    #[error("iteration diverged: non-finite value at iteration {iteration}")]
    Divergence { iteration: usize },

    #[error("parameter tuning failed: {0}")]
    TuningFailure(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("unsupported format: {0}")]
    Format(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
