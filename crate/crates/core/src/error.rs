use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed manifest {path}: {source}")]
    Manifest {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("parse error in {path} line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("shape mismatch for `{id}`: {msg}")]
    Shape { id: String, msg: String },

    #[error("duplicate identifier `{0}`")]
    Duplicate(String),

    #[error("unknown object type `{0}`")]
    UnknownType(String),

    #[error("unknown edge `{0}`")]
    UnknownEdge(String),

    #[error("non-finite entry in `{id}` at ({row}, {col})")]
    NonFinite { id: String, row: usize, col: usize },

    #[error("fusion graph is disconnected: types {unreachable:?} cannot be reached from `{root}`")]
    Disconnected {
        root: String,
        unreachable: Vec<String>,
    },

    #[error("invalid labels for type `{id}`: {msg}")]
    Labels { id: String, msg: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid chain: {0}")]
    InvalidChain(String),

    #[error("numerical failure at iteration {iteration}: {msg}")]
    Numerical { iteration: usize, msg: String },

    #[error("integration failed for candidate {candidate}: non-finite integrand")]
    Integration { candidate: usize },

    #[error("empty candidate pool")]
    EmptyPool,

    #[error("ranking metrics undefined: {n_pos} positives, {n_neg} negatives")]
    DegenerateClasses { n_pos: usize, n_neg: usize },

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that come from floating-point breakdown rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical { .. } | Error::Integration { .. })
    }
}
