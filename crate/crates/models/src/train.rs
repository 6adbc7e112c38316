//! Epoch engines and the five training entry points.
//!
//! Two engines cover all kinds: a cross-entropy loop for the softmax
//! classifiers and a contrastive pair loop for the siamese kinds. Both
//! draw every random decision (weight init, shuffles, pair draws) from
//! seed streams derived off the recipe seed, so a recipe plus a dataset
//! determines the trained model bit for bit.

use fsem_core::{contrastive_loss, cross_entropy, derive_seed, CoreError, Network, Sgd};
use fsem_data::{sample_pairs, LabeledDataset, SplitDataset, SplitIndices};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::architecture::{
    build_cnn, build_logistic_regression, build_siamese, build_siamese_transfer, build_transfer,
    InputShape, CONV_STACK_LEN,
};
use crate::error::{ModelsError, Result};
use crate::infer::{argmax_rows, embeddings_over, nearest_prototype, prototypes_from};
use crate::model::{EpochStats, TrainedModel};
use crate::recipe::{ModelKind, ModelRecipe};

/// Seed stream reserved for weight initialization. Epoch streams use the
/// epoch index, which can never reach this value.
const INIT_STREAM: u64 = u64::MAX;

fn weight_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, INIT_STREAM))
}

fn epoch_rng(seed: u64, epoch: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, epoch as u64))
}

fn sgd_for(recipe: &ModelRecipe) -> Result<Sgd<f32>> {
    let mut opt = Sgd::new(recipe.learning_rate as f32)?;
    if let Some(m) = recipe.momentum {
        opt = opt.with_momentum(m as f32)?;
    }
    Ok(opt)
}

/// Re-tag a non-finite loss with the epoch it surfaced in.
fn diverged(err: CoreError, epoch: usize) -> ModelsError {
    match err {
        CoreError::NonFiniteLoss(detail) => ModelsError::TrainingDiverged { epoch, detail },
        other => ModelsError::Core(other),
    }
}

fn input_shape(ds: &LabeledDataset) -> Result<InputShape> {
    let (h, w, c) = ds.uniform_dims()?;
    Ok(InputShape::new(h, w, c))
}

fn ensure_nonempty_train(split: &SplitDataset) -> Result<()> {
    if split.train().is_empty() {
        return Err(ModelsError::EmptySplit("train"));
    }
    Ok(())
}

fn expect_kind(recipe: &ModelRecipe, want: ModelKind) -> Result<()> {
    if recipe.kind != want {
        return Err(ModelsError::InvalidRecipe(format!(
            "this entry point trains {want} recipes, got {}",
            recipe.kind
        )));
    }
    Ok(())
}

/// Fraction of `indices` whose argmax prediction matches its label.
fn softmax_accuracy(
    net: &Network<f32>,
    parent: &LabeledDataset,
    indices: &[usize],
) -> Result<f64> {
    let logits = embeddings_over(net, parent, indices)?;
    let predicted = argmax_rows(&logits);
    let labels = parent.labels();
    let hits = indices
        .iter()
        .zip(&predicted)
        .filter(|&(&i, &p)| labels[i] as usize == p)
        .count();
    Ok(hits as f64 / indices.len() as f64)
}

/// Validation accuracy under nearest-prototype classification, with
/// prototypes recomputed from the current training-set embeddings.
fn prototype_accuracy(net: &Network<f32>, split: &SplitDataset) -> Result<f64> {
    let parent = split.parent();
    let train_emb = embeddings_over(net, parent, split.train())?;
    let train_labels = split.labels_of(split.train());
    let protos = prototypes_from(&train_emb, &train_labels, parent.category_count())?;
    let val_emb = embeddings_over(net, parent, split.validation())?;
    let predicted = nearest_prototype(&val_emb, &protos)?;
    let val_labels = split.labels_of(split.validation());
    let hits = predicted
        .iter()
        .zip(&val_labels)
        .filter(|&(&p, &l)| p == l as usize)
        .count();
    Ok(hits as f64 / predicted.len() as f64)
}

/// Shuffled mini-batch cross-entropy epochs over the train split,
/// mutating `net` in place.
fn run_classifier_epochs(
    net: &mut Network<f32>,
    split: &SplitDataset,
    recipe: &ModelRecipe,
) -> Result<Vec<EpochStats>> {
    let parent = split.parent();
    let mut optimizer = sgd_for(recipe)?;
    let mut trace = Vec::with_capacity(recipe.epochs);
    for epoch in 0..recipe.epochs {
        let mut order = split.train().to_vec();
        order.shuffle(&mut epoch_rng(recipe.seed, epoch));
        let mut weighted_loss = 0.0f64;
        for chunk in order.chunks(recipe.batch_size) {
            let (batch, labels) = parent.batch(chunk)?;
            let (logits, fwd) = net.forward_logits(&batch)?;
            let (loss, grad) =
                cross_entropy(&logits, &labels).map_err(|e| diverged(e, epoch + 1))?;
            net.backward(&fwd, &grad)?;
            optimizer.step(net)?;
            weighted_loss += f64::from(loss) * chunk.len() as f64;
        }
        let val_accuracy = if split.validation().is_empty() {
            None
        } else {
            Some(softmax_accuracy(net, parent, split.validation())?)
        };
        trace.push(EpochStats {
            epoch: epoch + 1,
            train_loss: weighted_loss / order.len() as f64,
            val_accuracy,
        });
    }
    Ok(trace)
}

/// Contrastive pair epochs: both pair members pass through the one shared
/// network, and both branch gradients accumulate before each step.
fn run_siamese_epochs(
    net: &mut Network<f32>,
    split: &SplitDataset,
    recipe: &ModelRecipe,
) -> Result<Vec<EpochStats>> {
    let parent = split.parent();
    let train_idx = split.train();
    let train_labels = split.labels_of(train_idx);
    let pair_count =
        ((recipe.pairs_per_epoch_factor * train_idx.len() as f64).ceil() as usize).max(1);
    let margin = recipe.margin as f32;
    let mut optimizer = sgd_for(recipe)?;
    let mut trace = Vec::with_capacity(recipe.epochs);
    for epoch in 0..recipe.epochs {
        let mut rng = epoch_rng(recipe.seed, epoch);
        let pairs = sample_pairs(&train_labels, pair_count, recipe.positive_ratio, &mut rng)?;
        let mut weighted_loss = 0.0f64;
        for start in (0..pairs.len()).step_by(recipe.batch_size) {
            let end = pairs.len().min(start + recipe.batch_size);
            let left: Vec<usize> = pairs.left[start..end].iter().map(|&i| train_idx[i]).collect();
            let right: Vec<usize> =
                pairs.right[start..end].iter().map(|&i| train_idx[i]).collect();
            let (batch_l, _) = parent.batch(&left)?;
            let (batch_r, _) = parent.batch(&right)?;
            let (emb_l, fwd_l) = net.forward_logits(&batch_l)?;
            let (emb_r, fwd_r) = net.forward_logits(&batch_r)?;
            let (loss, grad_l, grad_r) =
                contrastive_loss(&emb_l, &emb_r, &pairs.same[start..end], margin)
                    .map_err(|e| diverged(e, epoch + 1))?;
            net.backward(&fwd_r, &grad_r)?;
            net.backward(&fwd_l, &grad_l)?;
            optimizer.step(net)?;
            weighted_loss += f64::from(loss) * (end - start) as f64;
        }
        let val_accuracy = if split.validation().is_empty() {
            None
        } else {
            Some(prototype_accuracy(net, split)?)
        };
        trace.push(EpochStats {
            epoch: epoch + 1,
            train_loss: weighted_loss / pairs.len() as f64,
            val_accuracy,
        });
    }
    Ok(trace)
}

/// Train the flatten → linear → softmax baseline with cross-entropy.
pub fn train_logistic_regression(
    split: &SplitDataset,
    recipe: &ModelRecipe,
) -> Result<TrainedModel> {
    recipe.validate()?;
    expect_kind(recipe, ModelKind::LogisticRegression)?;
    ensure_nonempty_train(split)?;
    let parent = split.parent();
    let shape = input_shape(parent)?;
    let mut net =
        build_logistic_regression(shape, parent.category_count(), &mut weight_rng(recipe.seed));
    let trace = run_classifier_epochs(&mut net, split, recipe)?;
    Ok(TrainedModel { recipe: recipe.clone(), network: net, prototypes: None, trace })
}

/// Train the five-conv-block, five-linear-layer network with cross-entropy.
pub fn train_cnn(split: &SplitDataset, recipe: &ModelRecipe) -> Result<TrainedModel> {
    recipe.validate()?;
    expect_kind(recipe, ModelKind::Cnn)?;
    ensure_nonempty_train(split)?;
    let parent = split.parent();
    let shape = input_shape(parent)?;
    let mut net = build_cnn(shape, parent.category_count(), recipe, &mut weight_rng(recipe.seed))?;
    let trace = run_classifier_epochs(&mut net, split, recipe)?;
    Ok(TrainedModel { recipe: recipe.clone(), network: net, prototypes: None, trace })
}

/// A convolutional stack trained on an auxiliary task, ready to seed a
/// transfer or siamese-transfer model, along with the trace of the
/// pretraining run that produced it.
#[derive(Debug, Clone)]
pub struct PretrainedBackbone {
    /// The five conv/relu/pool blocks, linear head discarded.
    pub network: Network<f32>,
    pub trace: Vec<EpochStats>,
}

/// Train the full CNN on the auxiliary dataset (all of it — no held-out
/// parts), then discard the linear head and keep the convolutional stack.
///
/// The auxiliary categories should be disjoint from the target task's;
/// that is the caller's contract, since this function never sees the
/// target dataset.
pub fn pretrain_backbone(aux: &LabeledDataset, recipe: &ModelRecipe) -> Result<PretrainedBackbone> {
    recipe.validate()?;
    if aux.category_count() < 2 {
        return Err(ModelsError::IncompatibleInput(format!(
            "auxiliary pretraining needs at least 2 categories, got {}",
            aux.category_count()
        )));
    }
    if aux.is_empty() {
        return Err(ModelsError::EmptySplit("auxiliary"));
    }
    let shape = input_shape(aux)?;
    let mut net = build_cnn(shape, aux.category_count(), recipe, &mut weight_rng(recipe.seed))?;
    let indices = SplitIndices {
        train: (0..aux.len()).collect(),
        val: Vec::new(),
        test: Vec::new(),
    };
    let split = SplitDataset::new(aux.clone(), indices)?;
    let trace = run_classifier_epochs(&mut net, &split, recipe)?;
    Ok(PretrainedBackbone { network: net.prefix(CONV_STACK_LEN)?, trace })
}

/// Freeze a pretrained backbone and train a fresh linear + softmax head
/// on the target split.
pub fn transfer_train(
    split: &SplitDataset,
    backbone: &Network<f32>,
    recipe: &ModelRecipe,
) -> Result<TrainedModel> {
    recipe.validate()?;
    expect_kind(recipe, ModelKind::Transfer)?;
    ensure_nonempty_train(split)?;
    let parent = split.parent();
    let shape = input_shape(parent)?;
    let mut net = build_transfer(
        backbone,
        shape,
        parent.category_count(),
        &mut weight_rng(recipe.seed),
    )?;
    let trace = run_classifier_epochs(&mut net, split, recipe)?;
    Ok(TrainedModel { recipe: recipe.clone(), network: net, prototypes: None, trace })
}

/// Train a shared-weight embedding tower with contrastive pairs, then
/// record per-category prototypes from the final training embeddings.
///
/// `backbone` seeds the convolutional stack when given. For the
/// `siamese-transfer` kind it is required and stays frozen; for plain
/// `siamese` it is an optional warm start and remains trainable.
pub fn train_siamese(
    split: &SplitDataset,
    recipe: &ModelRecipe,
    backbone: Option<&Network<f32>>,
) -> Result<TrainedModel> {
    recipe.validate()?;
    if !recipe.kind.is_siamese() {
        return Err(ModelsError::InvalidRecipe(format!(
            "this entry point trains siamese kinds, got {}",
            recipe.kind
        )));
    }
    ensure_nonempty_train(split)?;
    let parent = split.parent();
    let shape = input_shape(parent)?;
    let mut rng = weight_rng(recipe.seed);
    let mut net = match (recipe.kind, backbone) {
        (ModelKind::SiameseTransfer, Some(b)) => build_siamese_transfer(b, shape, recipe, &mut rng)?,
        (ModelKind::SiameseTransfer, None) => {
            return Err(ModelsError::InvalidRecipe(
                "siamese-transfer needs a pretrained backbone".into(),
            ));
        }
        (ModelKind::Siamese, Some(b)) => {
            let mut warm = build_siamese_transfer(b, shape, recipe, &mut rng)?;
            warm.set_frozen(vec![false; warm.len()])?;
            warm
        }
        (ModelKind::Siamese, None) => build_siamese(shape, recipe, &mut rng)?,
        _ => unreachable!("non-siamese kinds rejected above"),
    };
    let trace = run_siamese_epochs(&mut net, split, recipe)?;
    let train_emb = embeddings_over(&net, parent, split.train())?;
    let train_labels = split.labels_of(split.train());
    let prototypes = prototypes_from(&train_emb, &train_labels, parent.category_count())?;
    Ok(TrainedModel {
        recipe: recipe.clone(),
        network: net,
        prototypes: Some(prototypes),
        trace,
    })
}
