use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("matrix has no positive mass (empty mass)")]
    EmptyMass,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("embedding dimension is undefined (no vectors loaded)")]
    NoEmbeddings,

    #[error("embeddings missing for {missing} of {total} candidates")]
    EmbeddingCoverage { missing: usize, total: usize },

    #[error("rule references criterion {0} which the table does not carry")]
    MissingCriterion(String),

    #[error("zero rank variance")]
    ZeroRankVariance,

    #[error("insufficient coverage: {used} usable pairs")]
    InsufficientCoverage { used: usize },

    #[error("duplicate test pair ({0}, {1})")]
    DuplicatePair(String, String),

    #[error("unknown baseline matrix {0}")]
    UnknownBaseline(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("stage {stage}: {msg}")]
    Stage { stage: String, msg: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl ToString, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            msg: msg.into(),
        }
    }
}
