use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong between a config file and a finished run.
#[derive(Debug, Error)]
pub enum CliError {
    /// A config file failed to parse or validate; `location` is
    /// `path:line` when the offending line is known, else just the path.
    #[error("config {location}: {detail}")]
    Config { location: String, detail: String },

    /// A stage was asked to run before the stage that produces its input.
    #[error("stage `{stage}` needs `{path}`; run the `{producer}` stage first")]
    MissingArtifact {
        stage: &'static str,
        path: PathBuf,
        producer: &'static str,
    },

    /// A persisted artifact exists but its content is not what the
    /// pipeline wrote (truncated, edited, or from an incompatible run).
    #[error("artifact `{path}`: {detail}")]
    Artifact { path: PathBuf, detail: String },

    /// A stage failed; wraps the cause so the runner can name the stage.
    #[error("stage `{stage}` failed: {detail}")]
    Stage { stage: &'static str, detail: String },

    /// Manifest verification found a missing or altered artifact.
    #[error("manifest check failed for `{path}`: {detail}")]
    ManifestMismatch { path: PathBuf, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] fsem_core::CoreError),

    #[error(transparent)]
    Data(#[from] fsem_data::DataError),

    #[error(transparent)]
    Models(#[from] fsem_models::ModelsError),

    #[error(transparent)]
    Unsupervised(#[from] fsem_unsupervised::UnsupervisedError),

    #[error(transparent)]
    Metrics(#[from] fsem_metrics::MetricsError),
}

impl CliError {
    /// Attach a file path to a bare I/O error.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
