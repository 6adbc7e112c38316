use fsem_core::{Network, Tensor};

use crate::recipe::ModelRecipe;

/// One epoch's summary in a training trace.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Mean training loss over the epoch (weighted by batch size).
    pub train_loss: f64,
    /// Accuracy on the validation split, when one exists.
    pub val_accuracy: Option<f64>,
}

/// A recipe realized against data: the trained network, optional
/// per-category prototypes, and the per-epoch trace that produced it.
///
/// Immutable once training returns; cheap to clone and safe to share
/// across threads.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub recipe: ModelRecipe,
    pub network: Network<f32>,
    /// `[categories, embedding_dim]`, present exactly for siamese kinds:
    /// row `c` is the mean training-set embedding of category `c`.
    pub prototypes: Option<Tensor<f32>>,
    pub trace: Vec<EpochStats>,
}

impl TrainedModel {
    /// Training loss recorded at the final epoch, if any epochs ran.
    pub fn final_loss(&self) -> Option<f64> {
        self.trace.last().map(|s| s.train_loss)
    }
}
