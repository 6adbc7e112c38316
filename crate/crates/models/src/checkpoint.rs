//! Model checkpoints: the network container wrapped with a model-kind tag
//! and a prototype block, so a saved model can answer `evaluate` without
//! its original recipe.

use std::io::{Read, Write};

use fsem_core::{load_network, save_network, Network, Tensor};
use fsem_data::LabeledDataset;

use crate::error::{ModelsError, Result};
use crate::infer::{embed_with, predict};
use crate::model::TrainedModel;
use crate::recipe::ModelKind;

/// Four-byte tag opening every serialized model.
pub const MODEL_MAGIC: &[u8; 4] = b"FSMD";
/// Current format version. Bumped on any layout change.
pub const MODEL_VERSION: u32 = 1;

/// A model restored from a checkpoint: enough to embed and predict, but
/// without the training-time recipe and trace.
#[derive(Debug, Clone)]
pub struct SavedModel {
    pub kind: ModelKind,
    pub network: Network<f32>,
    /// `[categories, embedding_dim]`, present exactly for siamese kinds.
    pub prototypes: Option<Tensor<f32>>,
}

impl SavedModel {
    /// Embedding matrix and labels for every sample of `ds`.
    pub fn embed(&self, ds: &LabeledDataset) -> Result<(Tensor<f32>, Vec<u32>)> {
        embed_with(&self.network, ds)
    }

    /// Predicted labels under this kind's inference rule.
    pub fn evaluate(&self, ds: &LabeledDataset) -> Result<Vec<usize>> {
        predict(&self.network, self.kind, self.prototypes.as_ref(), ds)
    }
}

fn check_prototype_consistency(kind: ModelKind, prototypes: Option<&Tensor<f32>>) -> Result<()> {
    match (kind.is_siamese(), prototypes) {
        (true, None) => Err(ModelsError::Checkpoint(format!(
            "{kind} model is missing its prototype block"
        ))),
        (false, Some(_)) => Err(ModelsError::Checkpoint(format!(
            "{kind} model must not carry prototypes"
        ))),
        _ => Ok(()),
    }
}

/// Serialize a trained model: magic, version, kind tag, the network
/// container, then the prototype block (category count, embedding
/// dimension, row-major little-endian f32 payload; two zeros when the
/// kind has no prototypes).
pub fn save_model<W: Write>(model: &TrainedModel, out: &mut W) -> Result<()> {
    check_prototype_consistency(model.recipe.kind, model.prototypes.as_ref())?;
    out.write_all(MODEL_MAGIC)?;
    out.write_all(&MODEL_VERSION.to_le_bytes())?;
    out.write_all(&[model.recipe.kind.tag()])?;
    save_network(&model.network, out)?;
    match &model.prototypes {
        Some(p) => {
            out.write_all(&(p.shape()[0] as u32).to_le_bytes())?;
            out.write_all(&(p.shape()[1] as u32).to_le_bytes())?;
            for &v in p.data() {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        None => {
            out.write_all(&0u32.to_le_bytes())?;
            out.write_all(&0u32.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

/// Read a model previously written by [`save_model`].
pub fn load_model<R: Read>(input: &mut R) -> Result<SavedModel> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MODEL_MAGIC {
        return Err(ModelsError::Checkpoint(format!(
            "bad magic {magic:?}; not a model checkpoint"
        )));
    }
    let version = read_u32(input)?;
    if version != MODEL_VERSION {
        return Err(ModelsError::Checkpoint(format!(
            "unsupported version {version} (current is {MODEL_VERSION})"
        )));
    }
    let mut kind_tag = [0u8; 1];
    input.read_exact(&mut kind_tag)?;
    let kind = ModelKind::from_tag(kind_tag[0])?;
    let network = load_network(input)?;
    let count = read_u32(input)? as usize;
    let dim = read_u32(input)? as usize;
    let prototypes = if count == 0 && dim == 0 {
        None
    } else {
        let cells = count.checked_mul(dim).ok_or_else(|| {
            ModelsError::Checkpoint(format!("prototype block {count}x{dim} overflows"))
        })?;
        let mut data = Vec::with_capacity(cells);
        let mut buf = [0u8; 4];
        for _ in 0..cells {
            input.read_exact(&mut buf)?;
            data.push(f32::from_le_bytes(buf));
        }
        Some(Tensor::from_vec(vec![count, dim], data).map_err(ModelsError::Core)?)
    };
    check_prototype_consistency(kind, prototypes.as_ref())?;
    Ok(SavedModel { kind, network, prototypes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::architecture::{build_logistic_regression, build_siamese, InputShape};
    use crate::recipe::ModelRecipe;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params_of(net: &Network<f32>) -> Vec<f32> {
        net.layers()
            .iter()
            .flat_map(|l| l.params().into_iter().flat_map(|p| p.data().iter().copied()))
            .collect()
    }

    #[test]
    fn siamese_checkpoint_round_trips_bit_identically() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let recipe = ModelRecipe::new(ModelKind::Siamese);
        let net = build_siamese(InputShape::new(32, 32, 1), &recipe, &mut rng).unwrap();
        let protos = Tensor::from_vec(vec![3, 16], (0..48).map(|i| i as f32 * 0.25).collect())
            .unwrap();
        let model = TrainedModel {
            recipe: recipe.clone(),
            network: net,
            prototypes: Some(protos.clone()),
            trace: Vec::new(),
        };
        let mut bytes = Vec::new();
        save_model(&model, &mut bytes).unwrap();
        let loaded = load_model(&mut bytes.as_slice()).unwrap();
        assert_eq!(loaded.kind, ModelKind::Siamese);
        assert_eq!(params_of(&loaded.network), params_of(&model.network));
        assert_eq!(loaded.prototypes.unwrap().data(), protos.data());
    }

    #[test]
    fn classifier_checkpoint_omits_prototypes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let net = build_logistic_regression(InputShape::new(8, 8, 1), 3, &mut rng);
        let model = TrainedModel {
            recipe: ModelRecipe::new(ModelKind::LogisticRegression),
            network: net,
            prototypes: None,
            trace: Vec::new(),
        };
        let mut bytes = Vec::new();
        save_model(&model, &mut bytes).unwrap();
        let loaded = load_model(&mut bytes.as_slice()).unwrap();
        assert_eq!(loaded.kind, ModelKind::LogisticRegression);
        assert!(loaded.prototypes.is_none());
    }

    #[test]
    fn inconsistent_prototype_blocks_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let recipe = ModelRecipe::new(ModelKind::Siamese);
        let net = build_siamese(InputShape::new(32, 32, 1), &recipe, &mut rng).unwrap();
        let model = TrainedModel { recipe, network: net, prototypes: None, trace: Vec::new() };
        let mut bytes = Vec::new();
        assert!(save_model(&model, &mut bytes).is_err());
    }

    #[test]
    fn foreign_bytes_are_rejected() {
        let mut junk: &[u8] = b"PNG\x0d\x0a\x1a\x0a....";
        assert!(load_model(&mut junk).is_err());
    }
}
