use fsem_core::CoreError;
use fsem_data::DataError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, ModelsError>;

#[derive(Debug, Error)]
pub enum ModelsError {
    #[error("invalid recipe: {0}")]
    InvalidRecipe(String),

    #[error("training diverged at epoch {epoch}: {detail}")]
    TrainingDiverged { epoch: usize, detail: String },

    #[error("model has no prototypes; nearest-prototype inference needs a siamese-kind model")]
    MissingPrototypes,

    #[error("incompatible input: {0}")]
    IncompatibleInput(String),

    #[error("the {0} split is empty")]
    EmptySplit(&'static str),

    #[error("model checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Data(#[from] DataError),

    #[error(transparent)]
    Core(#[from] CoreError),
}
