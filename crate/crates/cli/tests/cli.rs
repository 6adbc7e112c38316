//! End-to-end pipeline checks at miniature scale: one config exercising
//! all five model kinds, a full run into a temp directory, and the
//! determinism / artifact-contract guarantees the runner makes.

use std::fs;
use std::path::Path;

use fsem_cli::config::parse_config;
use fsem_cli::error::CliError;
use fsem_cli::manifest::RunManifest;
use fsem_cli::pipeline::{run_experiment, run_stage, RunPaths, Stage};

/// Small enough to run in seconds, big enough that every stage has
/// real work: 2 categories x 25 images, five model blocks (so both
/// backbone kinds pretrain on the auxiliary shapes), a couple of
/// epochs each.
const MINI: &str = "\
[dataset]
source = synthetic
kinds = disk, cross
per_category = 25
noise = 0.05
jitter = 0.3
seed = 901
aux_kinds = ring, square
aux_per_category = 12

[preprocess]
expansion = 0.1
seed = 902

[model lr]
kind = logistic-regression
epochs = 2
batch_size = 8
seed = 911

[model cnn]
kind = cnn
conv_channels = 1,1,2,2,2
linear_widths = 2,2,2,2
epochs = 1
batch_size = 8
seed = 912

[model transfer]
kind = transfer
conv_channels = 1,1,2,2,2
linear_widths = 2,2,2,2
epochs = 1
pretrain_epochs = 1
batch_size = 8
seed = 913

[model siamese]
kind = siamese
conv_channels = 1,1,2,2,2
linear_widths = 2,2,2,2
embedding_dim = 2
epochs = 1
batch_size = 8
pairs_per_epoch_factor = 2.0
seed = 914

[model siamese-tr]
kind = siamese-transfer
conv_channels = 1,1,2,2,2
linear_widths = 2,2,2,2
embedding_dim = 2
epochs = 1
pretrain_epochs = 1
batch_size = 8
pairs_per_epoch_factor = 2.0
seed = 915

[clustering]
kmeans_restarts = 2
tsne_iterations = 120
seed = 903

[output]
dir = unused-by-tests
";

fn mini_config() -> fsem_cli::ExperimentConfig {
    parse_config(MINI, "mini").expect("mini config parses")
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn full_run_writes_complete_verified_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = mini_config();
    let manifest = run_experiment(&config, dir.path()).unwrap();

    let stage_names: Vec<&str> = manifest.stages.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(
        stage_names,
        ["synth", "preprocess", "train", "embed", "cluster", "evaluate", "report", "visualize"]
    );

    // The manifest on disk parses back and verifies against the tree.
    let paths = RunPaths::new(dir.path());
    let reloaded = RunManifest::load(&paths.manifest()).unwrap();
    assert_eq!(reloaded.config_hash, config.hash_hex());
    reloaded.verify(dir.path()).unwrap();

    // Table 1: exact column contract, one row per model, config order.
    let table1 = read(&paths.table1_csv());
    let mut lines = table1.lines();
    assert_eq!(lines.next(), Some("Model,Accuracy,Precision,Recall,F1-score"));
    let models: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(models, ["lr", "cnn", "transfer", "siamese", "siamese-tr"]);

    // Table 2: every model plus the pixel-space pipeline source.
    let table2 = read(&paths.table2_csv());
    let mut lines = table2.lines();
    assert_eq!(lines.next(), Some("Model,K-Means,GMM"));
    let sources: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(sources, ["lr", "cnn", "transfer", "siamese", "siamese-tr", "pca-tsne"]);

    // Silhouettes are real numbers in the defined range.
    for line in read(&paths.silhouette()).lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        for value in &fields[1..] {
            let v: f64 = value.parse().unwrap();
            assert!((-1.0..=1.0).contains(&v), "silhouette {v} out of range");
        }
    }

    // Every plot exists and draws one marker per test-split point.
    let split = read(&paths.split());
    let test_count = split
        .lines()
        .find(|l| l.starts_with("test"))
        .unwrap()
        .split_whitespace()
        .count()
        - 2; // "test" and "="
    for source in ["lr", "cnn", "transfer", "siamese", "siamese-tr", "pca-tsne"] {
        let svg = read(&paths.plot(source));
        assert_eq!(
            svg.matches("<circle").count(),
            test_count,
            "{source} plot marker count"
        );
    }
}

#[test]
fn identical_configs_produce_byte_identical_artifacts() {
    let config = mini_config();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let manifest_a = run_experiment(&config, dir_a.path()).unwrap();
    let manifest_b = run_experiment(&config, dir_b.path()).unwrap();

    let rels: Vec<&str> = manifest_a.artifacts().map(|a| a.rel_path.as_str()).collect();
    assert_eq!(
        rels,
        manifest_b.artifacts().map(|a| a.rel_path.as_str()).collect::<Vec<_>>()
    );
    for artifact in manifest_a.artifacts() {
        let a = fs::read(dir_a.path().join(&artifact.rel_path)).unwrap();
        let b = fs::read(dir_b.path().join(&artifact.rel_path)).unwrap();
        assert_eq!(a, b, "{} differs between runs", artifact.rel_path);
    }
}

#[test]
fn seed_override_changes_outputs_reproducibly() {
    let mut reseeded = mini_config();
    reseeded.override_seed(5);
    assert_ne!(mini_config().hash_hex(), reseeded.hash_hex());

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    // Dataset stage only: enough to see the reseeding in the data.
    for dir in [&dir_a, &dir_b] {
        run_stage(&reseeded, dir.path(), Stage::Dataset).unwrap();
    }
    let bytes_a = fs::read(RunPaths::new(dir_a.path()).dataset()).unwrap();
    let bytes_b = fs::read(RunPaths::new(dir_b.path()).dataset()).unwrap();
    assert_eq!(bytes_a, bytes_b, "same override, same bytes");

    let dir_c = tempfile::tempdir().unwrap();
    run_stage(&mini_config(), dir_c.path(), Stage::Dataset).unwrap();
    let bytes_c = fs::read(RunPaths::new(dir_c.path()).dataset()).unwrap();
    assert_ne!(bytes_a, bytes_c, "override must actually reseed");
}

#[test]
fn stages_name_their_missing_inputs_and_producer() {
    let dir = tempfile::tempdir().unwrap();
    let config = mini_config();

    let err = run_stage(&config, dir.path(), Stage::Train).unwrap_err();
    match err {
        CliError::MissingArtifact { stage, producer, .. } => {
            assert_eq!(stage, "train");
            assert_eq!(producer, "preprocess");
        }
        other => panic!("wrong error: {other}"),
    }

    let err = run_stage(&config, dir.path(), Stage::Preprocess).unwrap_err();
    match err {
        CliError::MissingArtifact { producer, .. } => assert_eq!(producer, "synth"),
        other => panic!("wrong error: {other}"),
    }
}

#[test]
fn single_stage_rerun_reproduces_the_same_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = mini_config();
    run_experiment(&config, dir.path()).unwrap();

    let paths = RunPaths::new(dir.path());
    let before = read(&paths.table1_csv()) + &read(&paths.table2_csv());
    fs::remove_file(paths.table1_csv()).unwrap();

    run_stage(&config, dir.path(), Stage::Report).unwrap();
    let after = read(&paths.table1_csv()) + &read(&paths.table2_csv());
    assert_eq!(before, after);
}
