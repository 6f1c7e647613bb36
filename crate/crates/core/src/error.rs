use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid document `{id}`: {reason}")]
    InvalidDocument { id: String, reason: String },

    #[error("cannot balance chunk set: {0}")]
    Balance(String),

    #[error("chunk `{0}` has no POS annotation but the feature scheme requires it")]
    MissingAnnotation(String),

    #[error("feature scheme {0} needs a resource list that was not provided")]
    MissingResource(&'static str),

    #[error("empty vocabulary for scheme {0}")]
    EmptyVocabulary(&'static str),

    #[error("PCA fit failed: {0}")]
    PcaFit(String),

    #[error("degenerate data: every dimension has zero variance")]
    DegenerateData,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error("marker selection produced an empty vocabulary")]
    EmptyMarkers,

    #[error("language model error: {0}")]
    LanguageModel(String),

    #[error("labeling needs exactly 2 clusters, got {0}")]
    Arity(usize),

    #[error("voting error: {0}")]
    Vote(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("synthetic spec error: {0}")]
    Synthetic(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
