//! Dataset plumbing for image-embedding experiments: portable-anymap
//! ingestion, a binary dataset container, bilinear resizing, seeded affine
//! augmentation, stratified splitting, and pair sampling.
//!
//! Everything randomized takes an explicit seed and derives independent
//! per-item streams from it, so datasets, splits, and augmentations are
//! reproducible byte-for-byte across runs and machines.

pub mod augment;
pub mod container;
pub mod dataset;
pub mod error;
pub mod ingest;
pub mod pairs;
pub mod pnm;
pub mod resize;
pub mod split;

pub use augment::{apply_affine, expand_dataset, AffineTransform, AugmentParams, FillMode};
pub use container::{load_dataset, save_dataset, DATASET_MAGIC, DATASET_VERSION};
pub use dataset::{ImageSample, LabeledDataset};
pub use error::{DataError, Result};
pub use ingest::{load_directory, ColorMode};
pub use pairs::{sample_pairs, PairSet};
pub use pnm::{decode_pnm, encode_pnm, to_grayscale};
pub use resize::resize_bilinear;
pub use split::{stratified_split, SplitDataset, SplitIndices, SplitRatios};
