use std::path::PathBuf;

/// Errors raised by graph construction, solvers, samplers and the experiment harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("retry budget exhausted: {0}")]
    RetryExhausted(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("value outside the supported range: {0}")]
    UnsupportedRange(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("walk exceeded {0} steps; nontermination suspected")]
    NonTermination(u64),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("invalid cutset: {0}")]
    InvalidCutset(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
