use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("shape mismatch between `{upstream}` and `{downstream}`: {detail}")]
    LayerChain {
        upstream: String,
        downstream: String,
        detail: String,
    },

    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("optimizer step requested before backward populated gradients")]
    StepBeforeBackward,

    #[error("non-finite loss: {0}")]
    NonFiniteLoss(String),

    #[error("gradient check: {0}")]
    GradCheck(String),

    #[error("checkpoint format: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
