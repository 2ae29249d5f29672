use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// A file did not parse. `location` names a byte offset or a line.
    #[error("format error in {} at {location}: {msg}", path.display())]
    Format {
        path: PathBuf,
        location: String,
        msg: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    /// A mathematical operation was asked for outside its domain
    /// (cosine with a zero vector, for instance).
    #[error("domain error: {0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, location: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            location: location.into(),
            msg: msg.into(),
        }
    }

    /// Process exit status used by the `ssc` binary and the C API status codes.
    ///
    /// 2 = usage / parameter, 3 = validation / format, 4 = numerical / domain,
    /// 1 = I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 1,
            Error::Parameter(_) => 2,
            Error::Format { .. } | Error::Validation(_) => 3,
            Error::Numerical(_) | Error::Domain(_) => 4,
        }
    }
}
