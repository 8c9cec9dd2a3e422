use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised across the pipeline.
///
/// Each variant maps onto one CLI exit code, see [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes, hyperparameters or weights that do not fit together.
    #[error("configuration error: {0}")]
    Config(String),

    /// Well-formed input carrying invalid values (NaN, negative times, unknown labels).
    #[error("data error: {0}")]
    Data(String),

    /// A file that does not follow its declared layout.
    #[error("format error in {path}: {msg}")]
    Format { path: String, msg: String },

    /// Predictions and ground truth that cannot be evaluated together.
    #[error("evaluation input error: {0}")]
    EvalInput(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub(crate) fn format(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the `ama` binary: 2 format/data, 3 config, 4 eval input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Format { .. } | Error::Io { .. } | Error::Data(_) => 2,
            Error::Config(_) => 3,
            Error::EvalInput(_) => 4,
        }
    }
}
