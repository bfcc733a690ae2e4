use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch between {left:?} and {right:?}")]
    Shape {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{op}: need at least {needed} rows, got {got}")]
    InsufficientData {
        op: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("correlation undefined: {0} input is constant")]
    UndefinedCorrelation(&'static str),

    #[error("training diverged at iteration {iter}: {what} is not finite")]
    Divergence { iter: usize, what: &'static str },

    #[error("requested {requested} components but covariance has numerical rank {rank}")]
    Rank { requested: usize, rank: usize },

    #[error("gradient tape does not match network: {0}")]
    Tape(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn parse(path: &std::path::Path, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: msg.into(),
        }
    }
}
