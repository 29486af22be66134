use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("numerical failure: {message}")]
    Numerical {
        message: String,
        /// Offending component or iteration diagnostics, when known.
        index: Option<usize>,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>, index: Option<usize>) -> Self {
        Error::Numerical {
            message: msg.into(),
            index,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
