use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite activation input")]
    NonFiniteActivation,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("wrong magic for {kind} file: expected {expected:#010x}, found {found:#010x}")]
    BadMagic {
        kind: &'static str,
        expected: u32,
        found: u32,
    },
    #[error("truncated {0} file")]
    Truncated(&'static str),
    #[error("dimension overflow in idx header")]
    DimensionOverflow,
    #[error("{path}: row {row}: {message}")]
    Parse {
        path: String,
        row: usize,
        message: String,
    },
    #[error("class {class} absent in domain {domain}")]
    ClassAbsent { class: usize, domain: String },
    #[error("corpus views are not aligned")]
    Unaligned,

    #[error("divergence at epoch {epoch}: non-finite loss")]
    Divergence { epoch: usize },

    #[error("config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
