//! The five model families of the few-shot embedding study — logistic
//! regression, CNN, transfer, siamese, siamese-transfer — with one
//! training entry point per family, a shared embedding tap, and
//! nearest-prototype inference for the metric-learned kinds.
//!
//! Every family shares the same contract: a [`ModelRecipe`] plus a split
//! dataset yields a [`TrainedModel`] deterministically (bit-identical
//! parameters for equal seeds). All kinds expose embeddings through the
//! same tap — the network output just before any trailing softmax — so
//! downstream clustering can compare the families on equal terms.

pub mod architecture;
pub mod checkpoint;
pub mod error;
pub mod infer;
pub mod model;
pub mod recipe;
pub mod train;

pub use architecture::{InputShape, CONV_STACK_LEN};
pub use checkpoint::{load_model, save_model, SavedModel, MODEL_MAGIC, MODEL_VERSION};
pub use error::{ModelsError, Result};
pub use infer::{embed, evaluate, prototype_classify};
pub use model::{EpochStats, TrainedModel};
pub use recipe::{ModelKind, ModelRecipe};
pub use train::{
    pretrain_backbone, train_cnn, train_logistic_regression, train_siamese, transfer_train,
    PretrainedBackbone,
};
