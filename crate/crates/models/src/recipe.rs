use std::fmt;
use std::str::FromStr;

use crate::error::{ModelsError, Result};

/// Which of the five model families a recipe builds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Flatten → one linear layer → softmax.
    LogisticRegression,
    /// Five conv/relu/pool blocks, then five linear layers with a softmax head.
    Cnn,
    /// The CNN with its convolutional stack pretrained elsewhere and frozen;
    /// only a fresh linear + softmax head trains.
    Transfer,
    /// Shared-weight pair training into a metric embedding, classified by
    /// nearest prototype.
    Siamese,
    /// Siamese embedding head on top of a frozen pretrained convolutional
    /// stack.
    SiameseTransfer,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::LogisticRegression,
        ModelKind::Cnn,
        ModelKind::Transfer,
        ModelKind::Siamese,
        ModelKind::SiameseTransfer,
    ];

    /// Stable one-byte tag used by the model checkpoint container.
    pub fn tag(self) -> u8 {
        match self {
            ModelKind::LogisticRegression => 0,
            ModelKind::Cnn => 1,
            ModelKind::Transfer => 2,
            ModelKind::Siamese => 3,
            ModelKind::SiameseTransfer => 4,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.tag() == tag)
            .ok_or_else(|| ModelsError::Checkpoint(format!("unknown model kind tag {tag}")))
    }

    /// True for the pair-trained kinds that carry prototypes.
    pub fn is_siamese(self) -> bool {
        matches!(self, ModelKind::Siamese | ModelKind::SiameseTransfer)
    }

    /// True for the kinds that reuse a pretrained convolutional stack.
    pub fn uses_backbone(self) -> bool {
        matches!(self, ModelKind::Transfer | ModelKind::SiameseTransfer)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ModelKind::LogisticRegression => "logistic-regression",
            ModelKind::Cnn => "cnn",
            ModelKind::Transfer => "transfer",
            ModelKind::Siamese => "siamese",
            ModelKind::SiameseTransfer => "siamese-transfer",
        };
        f.write_str(name)
    }
}

impl FromStr for ModelKind {
    type Err = ModelsError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| {
                ModelsError::InvalidRecipe(format!(
                    "unknown model kind {s:?}; expected one of logistic-regression, cnn, \
                     transfer, siamese, siamese-transfer"
                ))
            })
    }
}

/// Everything needed to build and train one model, minus the data.
///
/// The same recipe struct serves all five kinds; fields irrelevant to a
/// kind (e.g. `margin` for a plain CNN) are simply unused. Two recipes
/// with the same fields and the same data produce bit-identical models.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRecipe {
    pub kind: ModelKind,
    /// Output channels of the five convolution blocks, shallow to deep.
    pub conv_channels: Vec<usize>,
    /// Widths of the four hidden linear layers; a fifth linear layer maps
    /// the last width onto the category count (or onto `embedding_dim`
    /// for siamese kinds, which skip the hidden stack).
    pub linear_widths: Vec<usize>,
    /// Metric-space dimension for siamese kinds.
    pub embedding_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// `None` disables the optimizer's velocity term.
    pub momentum: Option<f64>,
    /// Contrastive-loss margin for siamese kinds.
    pub margin: f64,
    /// Pairs drawn per epoch = ceil(factor × train-set size).
    pub pairs_per_epoch_factor: f64,
    /// Fraction of drawn pairs that share a category.
    pub positive_ratio: f64,
    pub seed: u64,
}

impl ModelRecipe {
    pub fn new(kind: ModelKind) -> Self {
        Self {
            kind,
            conv_channels: vec![4, 8, 16, 32, 64],
            linear_widths: vec![48, 32, 24, 16],
            embedding_dim: 16,
            epochs: 50,
            batch_size: 32,
            learning_rate: 0.01,
            momentum: Some(0.9),
            margin: 1.0,
            pairs_per_epoch_factor: 10.0,
            positive_ratio: 0.5,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.conv_channels.len() != 5 {
            return Err(ModelsError::InvalidRecipe(format!(
                "expected 5 convolution block widths, got {}",
                self.conv_channels.len()
            )));
        }
        if self.linear_widths.len() != 4 {
            return Err(ModelsError::InvalidRecipe(format!(
                "expected 4 hidden linear widths, got {}",
                self.linear_widths.len()
            )));
        }
        if self.conv_channels.iter().any(|&c| c == 0)
            || self.linear_widths.iter().any(|&w| w == 0)
        {
            return Err(ModelsError::InvalidRecipe(
                "layer widths must be positive".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(ModelsError::InvalidRecipe("batch size must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(ModelsError::InvalidRecipe(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if let Some(m) = self.momentum {
            if !(0.0..1.0).contains(&m) {
                return Err(ModelsError::InvalidRecipe(format!(
                    "momentum must lie in [0, 1), got {m}"
                )));
            }
        }
        if self.kind.is_siamese() {
            if self.embedding_dim < 2 {
                return Err(ModelsError::InvalidRecipe(format!(
                    "embedding dimension must be at least 2, got {}",
                    self.embedding_dim
                )));
            }
            if !(self.margin > 0.0) {
                return Err(ModelsError::InvalidRecipe(format!(
                    "margin must be positive, got {}",
                    self.margin
                )));
            }
            if !(self.pairs_per_epoch_factor > 0.0) {
                return Err(ModelsError::InvalidRecipe(format!(
                    "pairs-per-epoch factor must be positive, got {}",
                    self.pairs_per_epoch_factor
                )));
            }
            if !(0.0..=1.0).contains(&self.positive_ratio) {
                return Err(ModelsError::InvalidRecipe(format!(
                    "positive ratio must lie in [0, 1], got {}",
                    self.positive_ratio
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_tags_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(ModelKind::from_tag(kind.tag()).unwrap(), kind);
        }
        assert!(ModelKind::from_tag(9).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in ModelKind::ALL {
            assert_eq!(kind.to_string().parse::<ModelKind>().unwrap(), kind);
        }
        assert!("vgg16".parse::<ModelKind>().is_err());
    }

    #[test]
    fn default_recipe_is_valid() {
        for kind in ModelKind::ALL {
            ModelRecipe::new(kind).validate().unwrap();
        }
    }

    #[test]
    fn bad_hyperparameters_are_rejected() {
        let mut r = ModelRecipe::new(ModelKind::Cnn);
        r.learning_rate = 0.0;
        assert!(r.validate().is_err());

        let mut r = ModelRecipe::new(ModelKind::Siamese);
        r.embedding_dim = 1;
        assert!(r.validate().is_err());

        let mut r = ModelRecipe::new(ModelKind::Siamese);
        r.margin = -1.0;
        assert!(r.validate().is_err());

        let mut r = ModelRecipe::new(ModelKind::Cnn);
        r.conv_channels = vec![4, 8];
        assert!(r.validate().is_err());

        let mut r = ModelRecipe::new(ModelKind::Cnn);
        r.momentum = Some(1.0);
        assert!(r.validate().is_err());
    }
}
