//! Config-driven experiment runner.
//!
//! One text config describes a whole experiment — dataset (synthetic
//! shapes or an image directory), preprocessing, a list of model
//! recipes, clustering knobs, and an output directory. The pipeline
//! turns it into artifacts: trained checkpoints, test-split
//! embeddings, cluster assignments and silhouette scores, accuracy and
//! cluster-quality tables (CSV + markdown), SVG scatter plots, and a
//! manifest hashing everything the run wrote.
//!
//! Every stochastic stage seeds its own generator from the config, so
//! a config hash pins every output byte: run it twice, diff nothing.

pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod svg;
pub mod synth;

pub use config::{load_config, parse_config, ExperimentConfig, ModelBlock, PIPELINE_SOURCE};
pub use error::{CliError, Result};
pub use manifest::{sha256_hex, RunManifest};
pub use pipeline::{run_experiment, run_stage, RunPaths, Stage};
pub use svg::{scatter_svg, write_scatter};
pub use synth::{generate_synthetic, ShapeKind, SynthSpec};
