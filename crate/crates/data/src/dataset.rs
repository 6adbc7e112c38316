use crate::error::{DataError, Result};
use fsem_core::Tensor;

/// One labeled image: `[H, W, C]` pixels in `[0, 1]` plus provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSample {
    pub pixels: Tensor<f32>,
    pub label: u32,
    /// Where the sample came from: a relative file path for ingested
    /// images, a generator tag for synthetic ones, and a `#aug` suffix
    /// for augmented copies.
    pub source_id: String,
}

impl ImageSample {
    pub fn dims(&self) -> (usize, usize, usize) {
        let s = self.pixels.shape();
        (s[0], s[1], s[2])
    }
}

/// An ordered collection of samples plus the category-name table their
/// labels index into.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    samples: Vec<ImageSample>,
    category_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(category_names: Vec<String>, samples: Vec<ImageSample>) -> Result<Self> {
        if category_names.is_empty() {
            return Err(DataError::InvalidArgument(
                "a dataset needs at least one category".into(),
            ));
        }
        for s in &samples {
            if s.pixels.rank() != 3 {
                return Err(DataError::InvalidArgument(format!(
                    "sample {:?} has rank-{} pixels, expected [height, width, channels]",
                    s.source_id,
                    s.pixels.rank()
                )));
            }
            if s.label as usize >= category_names.len() {
                return Err(DataError::InvalidArgument(format!(
                    "sample {:?} labeled {} but only {} categories exist",
                    s.source_id,
                    s.label,
                    category_names.len()
                )));
            }
        }
        Ok(Self {
            samples,
            category_names,
        })
    }

    pub fn samples(&self) -> &[ImageSample] {
        &self.samples
    }

    pub fn category_names(&self) -> &[String] {
        &self.category_names
    }

    pub fn category_count(&self) -> usize {
        self.category_names.len()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labels(&self) -> Vec<u32> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Indices of every sample carrying `label`.
    pub fn indices_of(&self, label: u32) -> Vec<usize> {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == label)
            .map(|(i, _)| i)
            .collect()
    }

    /// Per-category sample counts, indexed by label.
    pub fn category_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.category_names.len()];
        for s in &self.samples {
            counts[s.label as usize] += 1;
        }
        counts
    }

    pub fn push(&mut self, sample: ImageSample) -> Result<()> {
        if sample.label as usize >= self.category_names.len() {
            return Err(DataError::InvalidArgument(format!(
                "sample {:?} labeled {} but only {} categories exist",
                sample.source_id,
                sample.label,
                self.category_names.len()
            )));
        }
        self.samples.push(sample);
        Ok(())
    }

    /// Common `(H, W, C)` when every sample agrees, else an error naming
    /// the first offender — batching and distance math need uniform dims.
    pub fn uniform_dims(&self) -> Result<(usize, usize, usize)> {
        let first = self
            .samples
            .first()
            .ok_or_else(|| DataError::InvalidArgument("empty dataset has no dimensions".into()))?
            .dims();
        for s in &self.samples {
            if s.dims() != first {
                return Err(DataError::InvalidArgument(format!(
                    "sample {:?} is {:?}, others are {:?}",
                    s.source_id,
                    s.dims(),
                    first
                )));
            }
        }
        Ok(first)
    }

    /// Stack the given samples into an `[N, H, W, C]` batch with labels.
    pub fn batch(&self, indices: &[usize]) -> Result<(Tensor<f32>, Vec<usize>)> {
        if indices.is_empty() {
            return Err(DataError::InvalidArgument("empty batch requested".into()));
        }
        let (h, w, c) = self.samples[indices[0]].dims();
        let mut data = Vec::with_capacity(indices.len() * h * w * c);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            let s = self.samples.get(i).ok_or_else(|| {
                DataError::InvalidArgument(format!("index {i} out of range ({} samples)", self.len()))
            })?;
            if s.dims() != (h, w, c) {
                return Err(DataError::InvalidArgument(format!(
                    "sample {:?} is {:?}, batch started at {:?}",
                    s.source_id,
                    s.dims(),
                    (h, w, c)
                )));
            }
            data.extend_from_slice(s.pixels.data());
            labels.push(s.label as usize);
        }
        let batch = Tensor::from_vec(vec![indices.len(), h, w, c], data)?;
        Ok((batch, labels))
    }

    /// Clone the samples at `indices` into a new dataset with the same
    /// category table, preserving the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<LabeledDataset> {
        let mut samples = Vec::with_capacity(indices.len());
        for &i in indices {
            let s = self.samples.get(i).ok_or_else(|| {
                DataError::InvalidArgument(format!("index {i} out of range ({} samples)", self.len()))
            })?;
            samples.push(s.clone());
        }
        LabeledDataset::new(self.category_names.clone(), samples)
    }
}
