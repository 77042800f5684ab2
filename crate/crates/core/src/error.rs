use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ingest error: {0}")]
    Ingest(String),

    #[error("ingest error in {path}: {message}")]
    IngestFile { path: PathBuf, message: String },

    #[error("{path}:{line}: malformed annotation row: {message}")]
    Annotation {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("enhancement error: {0}")]
    Enhance(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("training error: {0}")]
    Train(String),

    #[error("sample weights invalid: {0}")]
    Weight(String),

    #[error("QUBO encoding error: {0}")]
    Encoding(String),

    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    #[error("resampling error: {0}")]
    Resample(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
