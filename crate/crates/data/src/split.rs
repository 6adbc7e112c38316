use crate::dataset::LabeledDataset;
use crate::error::{DataError, Result};
use fsem_core::derive_seed;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Train/validation/test proportions. Must be positive and sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.6,
            val: 0.2,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("train", self.train), ("val", self.val), ("test", self.test)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(DataError::InvalidArgument(format!(
                    "{name} ratio {v} outside (0, 1)"
                )));
            }
        }
        let sum = self.train + self.val + self.test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(DataError::InvalidArgument(format!(
                "split ratios sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Sample indices for each partition. Indices refer to the dataset the
/// split was computed over and are sorted ascending within each part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partition a dataset category by category so every category lands in
/// every part with a count within ±1 of its exact proportional share.
///
/// For each category the integer allocation minimizing squared deviation
/// from the exact targets is chosen among allocations that give every part
/// at least one sample and deviate at most 1 from each target (ties break
/// to the lexicographically smallest (train, val) pair). Membership within
/// the category is then a seeded shuffle, one independent stream per
/// category, so adding a category never reshuffles the others.
pub fn stratified_split(
    ds: &LabeledDataset,
    ratios: &SplitRatios,
    seed: u64,
) -> Result<SplitIndices> {
    ratios.validate()?;
    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    for (label, name) in ds.category_names().iter().enumerate() {
        let mut members = ds.indices_of(label as u32);
        let n = members.len();
        if n < 3 {
            return Err(DataError::CategoryTooSmall {
                name: name.clone(),
                count: n,
                needed: 3,
                purpose: "split into train/val/test".into(),
            });
        }
        let (a, b) = allocate(n, ratios).ok_or_else(|| DataError::CategoryTooSmall {
            name: name.clone(),
            count: n,
            needed: 3,
            purpose: format!(
                "satisfy ratios {}/{}/{} within one sample per part",
                ratios.train, ratios.val, ratios.test
            ),
        })?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, label as u64));
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..a]);
        val.extend_from_slice(&members[a..a + b]);
        test.extend_from_slice(&members[a + b..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, val, test })
}

/// A dataset partitioned into train/validation/test views: one parent
/// plus three disjoint index lists that together cover it.
#[derive(Debug, Clone)]
pub struct SplitDataset {
    parent: LabeledDataset,
    indices: SplitIndices,
}

impl SplitDataset {
    /// Wrap an existing partition, checking it is a disjoint cover.
    pub fn new(parent: LabeledDataset, indices: SplitIndices) -> Result<Self> {
        let mut seen = vec![false; parent.len()];
        for (part, list) in [
            ("train", &indices.train),
            ("validation", &indices.val),
            ("test", &indices.test),
        ] {
            for &i in list {
                if i >= parent.len() {
                    return Err(DataError::InvalidArgument(format!(
                        "{part} index {i} outside dataset of {} samples",
                        parent.len()
                    )));
                }
                if seen[i] {
                    return Err(DataError::InvalidArgument(format!(
                        "sample {i} appears in more than one part"
                    )));
                }
                seen[i] = true;
            }
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(DataError::InvalidArgument(format!(
                "sample {missing} belongs to no part"
            )));
        }
        Ok(Self { parent, indices })
    }

    /// Stratified split of `parent` by `ratios`, seeded.
    pub fn split(parent: LabeledDataset, ratios: &SplitRatios, seed: u64) -> Result<Self> {
        let indices = stratified_split(&parent, ratios, seed)?;
        Ok(Self { parent, indices })
    }

    pub fn parent(&self) -> &LabeledDataset {
        &self.parent
    }

    pub fn indices(&self) -> &SplitIndices {
        &self.indices
    }

    pub fn train(&self) -> &[usize] {
        &self.indices.train
    }

    pub fn validation(&self) -> &[usize] {
        &self.indices.val
    }

    pub fn test(&self) -> &[usize] {
        &self.indices.test
    }

    /// Labels of one part, in the part's index order.
    pub fn labels_of(&self, part: &[usize]) -> Vec<u32> {
        part.iter()
            .map(|&i| self.parent.samples()[i].label)
            .collect()
    }
}

/// Best (train, val) counts for a category of `n`; test takes the rest.
fn allocate(n: usize, ratios: &SplitRatios) -> Option<(usize, usize)> {
    let targets = [
        ratios.train * n as f64,
        ratios.val * n as f64,
        ratios.test * n as f64,
    ];
    let mut best: Option<((usize, usize), f64)> = None;
    for a in 1..=n.saturating_sub(2) {
        for b in 1..=n - a - 1 {
            let c = n - a - b;
            let parts = [a as f64, b as f64, c as f64];
            if parts
                .iter()
                .zip(&targets)
                .any(|(p, t)| (p - t).abs() > 1.0 + 1e-9)
            {
                continue;
            }
            let dev: f64 = parts.iter().zip(&targets).map(|(p, t)| (p - t) * (p - t)).sum();
            let better = match &best {
                None => true,
                Some((_, best_dev)) => dev + 1e-12 < *best_dev,
            };
            if better {
                best = Some(((a, b), dev));
            }
        }
    }
    best.map(|(ab, _)| ab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ImageSample;
    use fsem_core::Tensor;

    fn dataset(per_category: &[usize]) -> LabeledDataset {
        let names: Vec<String> = (0..per_category.len()).map(|i| format!("c{i}")).collect();
        let mut samples = Vec::new();
        for (label, &n) in per_category.iter().enumerate() {
            for k in 0..n {
                samples.push(ImageSample {
                    pixels: Tensor::filled(&[2, 2, 1], 0.5),
                    label: label as u32,
                    source_id: format!("c{label}/{k}"),
                });
            }
        }
        LabeledDataset::new(names, samples).unwrap()
    }

    fn label_counts(ds: &LabeledDataset, part: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; ds.category_count()];
        for &i in part {
            counts[ds.samples()[i].label as usize] += 1;
        }
        counts
    }

    #[test]
    fn exact_ratios_split_exactly() {
        let ds = dataset(&[10, 10, 10]);
        let split = stratified_split(&ds, &SplitRatios::default(), 5).unwrap();
        assert_eq!(label_counts(&ds, &split.train), vec![6, 6, 6]);
        assert_eq!(label_counts(&ds, &split.val), vec![2, 2, 2]);
        assert_eq!(label_counts(&ds, &split.test), vec![2, 2, 2]);
    }

    #[test]
    fn parts_are_disjoint_and_complete() {
        let ds = dataset(&[7, 11, 5]);
        let split = stratified_split(&ds, &SplitRatios::default(), 9).unwrap();
        let mut all: Vec<usize> = split
            .train
            .iter()
            .chain(&split.val)
            .chain(&split.test)
            .copied()
            .collect();
        all.sort_unstable();
        let expected: Vec<usize> = (0..ds.len()).collect();
        assert_eq!(all, expected);
    }

    #[test]
    fn every_part_within_one_of_target() {
        let ds = dataset(&[7, 13, 9]);
        let ratios = SplitRatios::default();
        let split = stratified_split(&ds, &ratios, 3).unwrap();
        for (part, ratio) in [
            (&split.train, ratios.train),
            (&split.val, ratios.val),
            (&split.test, ratios.test),
        ] {
            for (label, &count) in label_counts(&ds, part).iter().enumerate() {
                let target = ratio * ds.category_counts()[label] as f64;
                assert!(
                    (count as f64 - target).abs() <= 1.0 + 1e-9,
                    "category {label}: {count} vs target {target}"
                );
            }
        }
    }

    #[test]
    fn same_seed_same_split_different_seed_different() {
        let ds = dataset(&[20, 20]);
        let a = stratified_split(&ds, &SplitRatios::default(), 1).unwrap();
        let b = stratified_split(&ds, &SplitRatios::default(), 1).unwrap();
        assert_eq!(a, b);
        let c = stratified_split(&ds, &SplitRatios::default(), 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn tiny_category_is_named_in_the_error() {
        let ds = dataset(&[10, 2]);
        let err = stratified_split(&ds, &SplitRatios::default(), 0).unwrap_err();
        assert!(err.to_string().contains("c1"), "got: {err}");
    }

    #[test]
    fn infeasible_ratios_are_reported() {
        let ds = dataset(&[3]);
        let ratios = SplitRatios {
            train: 0.98,
            val: 0.01,
            test: 0.01,
        };
        let err = stratified_split(&ds, &ratios, 0).unwrap_err();
        assert!(err.to_string().contains("c0"), "got: {err}");
    }

    #[test]
    fn invalid_ratios_are_rejected() {
        assert!(SplitRatios {
            train: 0.5,
            val: 0.5,
            test: 0.5
        }
        .validate()
        .is_err());
        assert!(SplitRatios {
            train: 1.0,
            val: 0.0,
            test: 0.0
        }
        .validate()
        .is_err());
    }

    #[test]
    fn minimum_viable_category_splits_one_each() {
        let ds = dataset(&[3, 3]);
        let split = stratified_split(&ds, &SplitRatios::default(), 4).unwrap();
        assert_eq!(label_counts(&ds, &split.train), vec![1, 1]);
        assert_eq!(label_counts(&ds, &split.val), vec![1, 1]);
        assert_eq!(label_counts(&ds, &split.test), vec![1, 1]);
    }

    #[test]
    fn split_dataset_wraps_a_valid_partition() {
        let ds = dataset(&[10, 10]);
        let split = SplitDataset::split(ds, &SplitRatios::default(), 6).unwrap();
        assert_eq!(split.train().len(), 12);
        assert_eq!(split.validation().len(), 4);
        assert_eq!(split.test().len(), 4);
        assert_eq!(split.labels_of(split.train()).len(), 12);
        // Views index the parent.
        let (batch, labels) = split.parent().batch(split.test()).unwrap();
        assert_eq!(batch.shape()[0], 4);
        assert_eq!(labels.len(), 4);
    }

    #[test]
    fn split_dataset_rejects_overlap_and_gaps() {
        let ds = dataset(&[4]);
        let overlap = SplitIndices {
            train: vec![0, 1],
            val: vec![1],
            test: vec![2, 3],
        };
        assert!(SplitDataset::new(ds.clone(), overlap).is_err());
        let gap = SplitIndices {
            train: vec![0],
            val: vec![1],
            test: vec![2],
        };
        assert!(SplitDataset::new(ds.clone(), gap).is_err());
        let out_of_range = SplitIndices {
            train: vec![0, 1],
            val: vec![2],
            test: vec![4],
        };
        assert!(SplitDataset::new(ds, out_of_range).is_err());
    }
}
