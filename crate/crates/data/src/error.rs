use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot decode {path}: {detail}")]
    Decode { path: PathBuf, detail: String },

    #[error("dataset container corrupt: {0}")]
    Container(String),

    #[error("no samples found under {0}")]
    EmptyDataset(PathBuf),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("category {name:?} has {count} samples; {needed} needed to {purpose}")]
    CategoryTooSmall {
        name: String,
        count: usize,
        needed: usize,
        purpose: String,
    },

    #[error("cannot draw a {kind} pair: {detail}")]
    PairImpossible { kind: String, detail: String },

    #[error(transparent)]
    Core(#[from] fsem_core::CoreError),

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl DataError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, DataError>;
