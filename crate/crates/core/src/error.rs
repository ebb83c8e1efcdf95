use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure classes; the CLI maps these onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Io,
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown source-type label `{0}`")]
    UnknownLabel(String),

    #[error("duplicate label `{0}` in label space")]
    DuplicateLabel(String),

    #[error("malformed parse: {0}")]
    MalformedParse(String),

    #[error("vocabulary is empty after filtering")]
    EmptyVocabulary,

    #[error("corpus has no documents")]
    EmptyCorpus,

    #[error("gold label index {index} is out of range for {size} source-types")]
    LabelOutOfRange { index: usize, size: usize },

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparameters(String),

    #[error("invalid training schedule: {0}")]
    InvalidSchedule(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty evaluation subset")]
    EmptySubset,

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),

    #[error("non-finite log-weight {value} while sampling {what}")]
    NonFiniteWeight { what: &'static str, value: f64 },

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("snapshot format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("snapshot checksum mismatch: the file is corrupted")]
    Checksum,

    #[error("snapshot does not match corpus: {0}")]
    SnapshotMismatch(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::NonFiniteWeight { .. } | Error::Inconsistent(_) => ErrorKind::Internal,
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
