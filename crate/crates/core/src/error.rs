use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied parameter is outside its legal range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A value violates a domain precondition (zero weight, zero capacity, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A file could not be parsed. `line` is 1-based.
    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A computation would exceed its configured memory budget.
    #[error("resource limit: {0}")]
    Resource(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// The API was driven in an order it does not allow (e.g. stepping a finished episode).
    #[error("usage error: {0}")]
    Usage(String),

    /// A configuration file or flag combination is invalid.
    #[error("configuration error: {0}")]
    Config(String),

    /// Reported results contradict an exact oracle; indicates a solver bug.
    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
