use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Shape { expected: String, found: String },

    #[error("invalid value for `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("unsupported composite term: regularizer `{regularizer}` with domain `{domain}`")]
    UnsupportedPair { regularizer: String, domain: String },

    #[error("invalid graph: {0}")]
    Graph(String),

    #[error("mixing round {round}: {reason}")]
    Mixing { round: u64, reason: String },

    #[error("non-finite input to {0}")]
    NonFinite(&'static str),

    #[error("iterate norm exceeded 1e12 at k = {k} (T = {rounds}, chi = {chi})")]
    Diverged { k: usize, rounds: usize, chi: f64 },

    #[error("{bound} violated at n = {n} (margin {margin:e})")]
    BoundViolation {
        bound: &'static str,
        n: usize,
        margin: f64,
    },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn shape(expected: impl ToString, found: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
