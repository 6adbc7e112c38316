//! Embedding extraction and label prediction for trained models.
//!
//! Every model kind exposes the same embedding tap: the network's output
//! just before any trailing softmax. For softmax classifiers that is the
//! pre-softmax logit vector (dimension = category count); for siamese
//! towers, which end at the linear embedding layer, it is the full output.

use fsem_core::{Network, Tensor};
use fsem_data::LabeledDataset;

use crate::error::{ModelsError, Result};
use crate::model::TrainedModel;

/// Batch size for inference passes; results are row-independent, so the
/// chunking is invisible in the output.
const INFER_CHUNK: usize = 64;

/// Forward `parent[indices]` up to the logits boundary, stacking rows in
/// index order.
pub(crate) fn embeddings_over(
    net: &Network<f32>,
    parent: &LabeledDataset,
    indices: &[usize],
) -> Result<Tensor<f32>> {
    if indices.is_empty() {
        return Err(ModelsError::IncompatibleInput(
            "cannot embed an empty sample list".into(),
        ));
    }
    let mut rows: Vec<f32> = Vec::new();
    let mut dim = 0usize;
    for chunk in indices.chunks(INFER_CHUNK) {
        let (batch, _) = parent.batch(chunk)?;
        let (out, _) = net.forward_logits(&batch)?;
        if out.rank() != 2 {
            return Err(ModelsError::IncompatibleInput(format!(
                "network produced rank-{} output; expected [batch, dim] embeddings",
                out.rank()
            )));
        }
        dim = out.shape()[1];
        rows.extend_from_slice(out.data());
    }
    Ok(Tensor::from_vec(vec![indices.len(), dim], rows)?)
}

/// Row-wise argmax with ties broken toward the lowest index.
pub(crate) fn argmax_rows(scores: &Tensor<f32>) -> Vec<usize> {
    let (n, c) = (scores.shape()[0], scores.shape()[1]);
    (0..n)
        .map(|i| {
            let row = &scores.data()[i * c..(i + 1) * c];
            let mut best = 0usize;
            for (j, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Per-category arithmetic means of the given embeddings: row `c` of the
/// result is the mean over rows of `embeddings` labeled `c`.
pub(crate) fn prototypes_from(
    embeddings: &Tensor<f32>,
    labels: &[u32],
    categories: usize,
) -> Result<Tensor<f32>> {
    let (n, d) = (embeddings.shape()[0], embeddings.shape()[1]);
    if labels.len() != n {
        return Err(ModelsError::IncompatibleInput(format!(
            "{} labels for {n} embeddings",
            labels.len()
        )));
    }
    let mut sums = vec![0.0f64; categories * d];
    let mut counts = vec![0usize; categories];
    for (i, &label) in labels.iter().enumerate() {
        let c = label as usize;
        if c >= categories {
            return Err(ModelsError::IncompatibleInput(format!(
                "label {c} out of range for {categories} categories"
            )));
        }
        counts[c] += 1;
        for j in 0..d {
            sums[c * d + j] += f64::from(embeddings.data()[i * d + j]);
        }
    }
    if let Some(c) = counts.iter().position(|&k| k == 0) {
        return Err(ModelsError::IncompatibleInput(format!(
            "category {c} has no samples to form a prototype"
        )));
    }
    let data: Vec<f32> = sums
        .iter()
        .enumerate()
        .map(|(i, &s)| (s / counts[i / d] as f64) as f32)
        .collect();
    Ok(Tensor::from_vec(vec![categories, d], data)?)
}

/// Assign each embedding row to the nearest prototype row by Euclidean
/// distance, ties broken toward the lowest category index.
pub(crate) fn nearest_prototype(embeddings: &Tensor<f32>, prototypes: &Tensor<f32>) -> Result<Vec<usize>> {
    let (n, d) = (embeddings.shape()[0], embeddings.shape()[1]);
    let (c, pd) = (prototypes.shape()[0], prototypes.shape()[1]);
    if d != pd {
        return Err(ModelsError::IncompatibleInput(format!(
            "embedding dimension {d} does not match prototype dimension {pd}"
        )));
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let row = &embeddings.data()[i * d..(i + 1) * d];
        let mut best = 0usize;
        let mut best_sq = f32::INFINITY;
        for k in 0..c {
            let proto = &prototypes.data()[k * d..(k + 1) * d];
            let sq: f32 = row
                .iter()
                .zip(proto)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if sq < best_sq {
                best_sq = sq;
                best = k;
            }
        }
        out.push(best);
    }
    Ok(out)
}

/// Embed every sample of `ds` with a bare network: row `i` of the matrix
/// is sample `i`'s embedding; the second element is the matching labels.
pub(crate) fn embed_with(
    net: &Network<f32>,
    ds: &LabeledDataset,
) -> Result<(Tensor<f32>, Vec<u32>)> {
    let indices: Vec<usize> = (0..ds.len()).collect();
    Ok((embeddings_over(net, ds, &indices)?, ds.labels()))
}

/// Predict labels for every sample of `ds` under the given kind's rule:
/// softmax-argmax for classifier kinds, nearest prototype for siamese.
pub(crate) fn predict(
    net: &Network<f32>,
    kind: crate::recipe::ModelKind,
    prototypes: Option<&Tensor<f32>>,
    ds: &LabeledDataset,
) -> Result<Vec<usize>> {
    let (embeddings, _) = embed_with(net, ds)?;
    if kind.is_siamese() {
        let protos = prototypes.ok_or(ModelsError::MissingPrototypes)?;
        nearest_prototype(&embeddings, protos)
    } else {
        Ok(argmax_rows(&embeddings))
    }
}

/// Embed every sample of `ds`: row `i` of the matrix is sample `i`'s
/// embedding; the second element returns the matching labels.
pub fn embed(model: &TrainedModel, ds: &LabeledDataset) -> Result<(Tensor<f32>, Vec<u32>)> {
    embed_with(&model.network, ds)
}

/// Nearest-prototype prediction over every sample of `ds`.
pub fn prototype_classify(model: &TrainedModel, ds: &LabeledDataset) -> Result<Vec<usize>> {
    let prototypes = model.prototypes.as_ref().ok_or(ModelsError::MissingPrototypes)?;
    let (embeddings, _) = embed(model, ds)?;
    nearest_prototype(&embeddings, prototypes)
}

/// Predicted labels for every sample of `ds`: softmax-argmax for the
/// classifier kinds, nearest prototype for the siamese kinds.
pub fn evaluate(model: &TrainedModel, ds: &LabeledDataset) -> Result<Vec<usize>> {
    predict(&model.network, model.recipe.kind, model.prototypes.as_ref(), ds)
}
