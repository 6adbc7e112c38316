//! The experiment pipeline: eight stages from raw dataset to reports
//! and plots.
//!
//! Every stage reads only persisted artifacts and writes new ones into
//! the run directory, so each is independently re-runnable and a
//! failed run keeps everything it produced for inspection. The full
//! run records a manifest of stage timings and artifact content
//! hashes, then verifies it before returning.
//!
//! Artifact layout under the run directory:
//!
//! ```text
//! dataset.bin  aux.bin                — as generated/ingested
//! preprocessed.bin  aux-preprocessed.bin  split.txt
//! models/NAME.model  models/NAME.trace.csv  models/NAME.backbone.net
//! embeddings/NAME.csv                — test-split embeddings
//! clustering/SOURCE.assignments.csv  clustering/SOURCE.layout.csv
//! clustering/silhouette.csv
//! reports/predictions/NAME.csv  reports/table{1,2}.{csv,md}
//! plots/SOURCE.svg
//! manifest.txt
//! ```

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use fsem_core::{derive_seed, save_network, Tensor};
use fsem_data::{
    expand_dataset, load_dataset, load_directory, resize_bilinear, save_dataset, ImageSample,
    LabeledDataset, SplitDataset, SplitIndices,
};
use fsem_metrics::{
    accuracy_table_csv, accuracy_table_markdown, classification_report, silhouette_score,
    silhouette_table_csv, silhouette_table_markdown, AccuracyRow, SilhouetteRow,
};
use fsem_models::{
    load_model, pretrain_backbone, save_model, train_cnn, train_logistic_regression,
    train_siamese, transfer_train, EpochStats, ModelKind, SavedModel, TrainedModel,
};
use fsem_unsupervised::{
    gmm_assign, gmm_fit, kmeans, tsne, GmmConfig, KmeansConfig, PcaModel, TsneConfig,
};
use rayon::prelude::*;

use crate::config::{DatasetConfig, ExperimentConfig, ModelBlock, PIPELINE_SOURCE};
use crate::error::{CliError, Result};
use crate::manifest::{record_stage, RunManifest};
use crate::svg::write_scatter;
use crate::synth::generate_synthetic;

/// Seed stream for a backbone's pretraining run, derived from the
/// model's own seed. Far above any epoch index so the streams can't
/// collide.
const PRETRAIN_STREAM: u64 = u64::MAX - 1;

/// The pipeline stages in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    /// Generate or ingest `dataset.bin` (and `aux.bin`).
    Dataset,
    Preprocess,
    Train,
    Embed,
    Cluster,
    Evaluate,
    Report,
    Visualize,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Dataset,
        Stage::Preprocess,
        Stage::Train,
        Stage::Embed,
        Stage::Cluster,
        Stage::Evaluate,
        Stage::Report,
        Stage::Visualize,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Dataset => "dataset",
            Stage::Preprocess => "preprocess",
            Stage::Train => "train",
            Stage::Embed => "embed",
            Stage::Cluster => "cluster",
            Stage::Evaluate => "evaluate",
            Stage::Report => "report",
            Stage::Visualize => "visualize",
        }
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            // The dataset stage answers to its subcommand names too.
            "dataset" | "synth" | "ingest" => Ok(Stage::Dataset),
            "preprocess" => Ok(Stage::Preprocess),
            "train" => Ok(Stage::Train),
            "embed" => Ok(Stage::Embed),
            "cluster" => Ok(Stage::Cluster),
            "evaluate" => Ok(Stage::Evaluate),
            "report" => Ok(Stage::Report),
            "visualize" => Ok(Stage::Visualize),
            other => Err(format!(
                "unknown stage `{other}` (expected one of dataset/synth/ingest, preprocess, \
                 train, embed, cluster, evaluate, report, visualize)"
            )),
        }
    }
}

/// File locations inside one run directory.
#[derive(Debug, Clone)]
pub struct RunPaths {
    pub root: PathBuf,
}

impl RunPaths {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn dataset(&self) -> PathBuf {
        self.root.join("dataset.bin")
    }
    pub fn aux(&self) -> PathBuf {
        self.root.join("aux.bin")
    }
    pub fn preprocessed(&self) -> PathBuf {
        self.root.join("preprocessed.bin")
    }
    pub fn aux_preprocessed(&self) -> PathBuf {
        self.root.join("aux-preprocessed.bin")
    }
    pub fn split(&self) -> PathBuf {
        self.root.join("split.txt")
    }
    pub fn model(&self, name: &str) -> PathBuf {
        self.root.join("models").join(format!("{name}.model"))
    }
    pub fn trace(&self, name: &str) -> PathBuf {
        self.root.join("models").join(format!("{name}.trace.csv"))
    }
    pub fn backbone(&self, name: &str) -> PathBuf {
        self.root.join("models").join(format!("{name}.backbone.net"))
    }
    pub fn backbone_trace(&self, name: &str) -> PathBuf {
        self.root
            .join("models")
            .join(format!("{name}.backbone.trace.csv"))
    }
    pub fn embeddings(&self, name: &str) -> PathBuf {
        self.root.join("embeddings").join(format!("{name}.csv"))
    }
    pub fn assignments(&self, source: &str) -> PathBuf {
        self.root
            .join("clustering")
            .join(format!("{source}.assignments.csv"))
    }
    pub fn layout(&self, source: &str) -> PathBuf {
        self.root
            .join("clustering")
            .join(format!("{source}.layout.csv"))
    }
    pub fn silhouette(&self) -> PathBuf {
        self.root.join("clustering").join("silhouette.csv")
    }
    pub fn predictions(&self, name: &str) -> PathBuf {
        self.root
            .join("reports")
            .join("predictions")
            .join(format!("{name}.csv"))
    }
    pub fn table1_csv(&self) -> PathBuf {
        self.root.join("reports").join("table1.csv")
    }
    pub fn table1_md(&self) -> PathBuf {
        self.root.join("reports").join("table1.md")
    }
    pub fn table2_csv(&self) -> PathBuf {
        self.root.join("reports").join("table2.csv")
    }
    pub fn table2_md(&self) -> PathBuf {
        self.root.join("reports").join("table2.md")
    }
    pub fn plot(&self, source: &str) -> PathBuf {
        self.root.join("plots").join(format!("{source}.svg"))
    }
    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.txt")
    }
}

/// Manifest name of the dataset stage: it reads as what it actually
/// did.
pub fn dataset_stage_name(config: &ExperimentConfig) -> &'static str {
    match config.dataset {
        DatasetConfig::Synthetic { .. } => "synth",
        DatasetConfig::Directory { .. } => "ingest",
    }
}

/// Run every stage in order, record the manifest, and verify it.
pub fn run_experiment(config: &ExperimentConfig, root: &Path) -> Result<RunManifest> {
    fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
    let paths = RunPaths::new(root);
    let mut manifest = RunManifest::new(config.hash_hex());

    for stage in Stage::ALL {
        let label = if stage == Stage::Dataset {
            dataset_stage_name(config)
        } else {
            stage.name()
        };
        let started = Instant::now();
        let files = run_stage(config, root, stage)?;
        let wall_ms = started.elapsed().as_millis() as u64;
        record_stage(&mut manifest, root, label, wall_ms, &files)?;
    }

    manifest.save(&paths.manifest())?;
    manifest.verify(root)?;
    Ok(manifest)
}

/// Run a single stage against whatever artifacts already exist.
/// Returns the files it wrote. Fails with the stage name attached.
pub fn run_stage(config: &ExperimentConfig, root: &Path, stage: Stage) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
    let paths = RunPaths::new(root);
    let outcome = match stage {
        Stage::Dataset => stage_dataset(config, &paths),
        Stage::Preprocess => stage_preprocess(config, &paths),
        Stage::Train => stage_train(config, &paths),
        Stage::Embed => stage_embed(config, &paths),
        Stage::Cluster => stage_cluster(config, &paths),
        Stage::Evaluate => stage_evaluate(config, &paths),
        Stage::Report => stage_report(config, &paths),
        Stage::Visualize => stage_visualize(config, &paths),
    };
    outcome.map_err(|e| stage_failure(stage.name(), e))
}

/// Wrap a stage's error with its name unless it already carries one.
fn stage_failure(stage: &'static str, err: CliError) -> CliError {
    match err {
        e @ (CliError::MissingArtifact { .. } | CliError::Stage { .. }) => e,
        e => CliError::Stage {
            stage,
            detail: e.to_string(),
        },
    }
}

// ---------------------------------------------------------------------
// Stage bodies.

fn stage_dataset(config: &ExperimentConfig, paths: &RunPaths) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    match &config.dataset {
        DatasetConfig::Synthetic { target, aux } => {
            save_dataset_file(&paths.dataset(), &generate_synthetic(target)?)?;
            files.push(paths.dataset());
            if let Some(aux) = aux {
                save_dataset_file(&paths.aux(), &generate_synthetic(aux)?)?;
                files.push(paths.aux());
            }
        }
        DatasetConfig::Directory {
            path,
            aux_path,
            color,
        } => {
            save_dataset_file(&paths.dataset(), &load_directory(path, *color)?)?;
            files.push(paths.dataset());
            if let Some(aux_path) = aux_path {
                save_dataset_file(&paths.aux(), &load_directory(aux_path, *color)?)?;
                files.push(paths.aux());
            }
        }
    }
    Ok(files)
}

fn stage_preprocess(config: &ExperimentConfig, paths: &RunPaths) -> Result<Vec<PathBuf>> {
    let producer = dataset_stage_name(config);
    let p = &config.preprocess;

    let ds = load_dataset_file("preprocess", &paths.dataset(), producer)?;
    let ds = apply_resize(ds, p.resize)?;
    let expanded = expand_dataset(&ds, p.expansion, &p.augment, derive_seed(p.seed, 1))?;
    let split = SplitDataset::split(expanded, &p.ratios, derive_seed(p.seed, 2))?;

    save_dataset_file(&paths.preprocessed(), split.parent())?;
    write_split(&paths.split(), split.indices())?;
    let mut files = vec![paths.preprocessed(), paths.split()];

    if config.dataset.has_aux() {
        let aux = load_dataset_file("preprocess", &paths.aux(), producer)?;
        let aux = apply_resize(aux, p.resize)?;
        save_dataset_file(&paths.aux_preprocessed(), &aux)?;
        files.push(paths.aux_preprocessed());
    }
    Ok(files)
}

fn stage_train(config: &ExperimentConfig, paths: &RunPaths) -> Result<Vec<PathBuf>> {
    let parent = load_dataset_file("train", &paths.preprocessed(), "preprocess")?;
    let indices = read_split("train", &paths.split(), "preprocess")?;
    let split = SplitDataset::new(parent, indices)?;

    let needs_aux = config
        .models
        .iter()
        .any(|b| b.recipe.kind.uses_backbone());
    let aux = if needs_aux {
        Some(load_dataset_file(
            "train",
            &paths.aux_preprocessed(),
            "preprocess",
        )?)
    } else {
        None
    };

    ensure_parent(&paths.model("x"))?;

    // Model blocks are independent given the shared split; train them
    // in parallel. Each block's artifacts are its own files, so the
    // result is identical to a sequential run.
    let per_block: Vec<Vec<PathBuf>> = config
        .models
        .par_iter()
        .map(|block| train_one(paths, &split, aux.as_ref(), block))
        .collect::<Result<_>>()?;
    Ok(per_block.into_iter().flatten().collect())
}

fn train_one(
    paths: &RunPaths,
    split: &SplitDataset,
    aux: Option<&LabeledDataset>,
    block: &ModelBlock,
) -> Result<Vec<PathBuf>> {
    let recipe = &block.recipe;
    let mut files = Vec::new();

    let backbone = if recipe.kind.uses_backbone() {
        let aux = aux.expect("config validation requires aux for backbone kinds");
        let mut pre_recipe = recipe.clone();
        pre_recipe.epochs = block.pretrain_epochs();
        pre_recipe.seed = derive_seed(recipe.seed, PRETRAIN_STREAM);
        let pre = pretrain_backbone(aux, &pre_recipe)?;

        let net_path = paths.backbone(&block.name);
        let mut out = BufWriter::new(File::create(&net_path).map_err(|e| CliError::io(&net_path, e))?);
        save_network(&pre.network, &mut out)?;
        files.push(net_path);
        write_trace(&paths.backbone_trace(&block.name), &pre.trace)?;
        files.push(paths.backbone_trace(&block.name));
        Some(pre)
    } else {
        None
    };

    let trained: TrainedModel = match recipe.kind {
        ModelKind::LogisticRegression => train_logistic_regression(split, recipe)?,
        ModelKind::Cnn => train_cnn(split, recipe)?,
        ModelKind::Transfer => {
            transfer_train(split, &backbone.as_ref().unwrap().network, recipe)?
        }
        ModelKind::Siamese => train_siamese(split, recipe, None)?,
        ModelKind::SiameseTransfer => {
            train_siamese(split, recipe, Some(&backbone.as_ref().unwrap().network))?
        }
    };

    let model_path = paths.model(&block.name);
    let mut out = BufWriter::new(File::create(&model_path).map_err(|e| CliError::io(&model_path, e))?);
    save_model(&trained, &mut out)?;
    files.push(model_path);
    write_trace(&paths.trace(&block.name), &trained.trace)?;
    files.push(paths.trace(&block.name));
    Ok(files)
}

fn stage_embed(config: &ExperimentConfig, paths: &RunPaths) -> Result<Vec<PathBuf>> {
    let test = load_test_subset("embed", paths)?;
    let mut files = Vec::new();
    for block in &config.models {
        let model = load_model_file("embed", &paths.model(&block.name), "train")?;
        let (embeddings, labels) = model.embed(&test)?;
        let path = paths.embeddings(&block.name);
        write_embeddings(&path, &embeddings, &labels)?;
        files.push(path);
    }
    Ok(files)
}

fn stage_cluster(config: &ExperimentConfig, paths: &RunPaths) -> Result<Vec<PathBuf>> {
    let parent = load_dataset_file("cluster", &paths.preprocessed(), "preprocess")?;
    let indices = read_split("cluster", &paths.split(), "preprocess")?;
    let test = parent.subset(&indices.test)?;
    let k = config.clustering.k.unwrap_or(parent.category_count());
    let c = &config.clustering;

    // Clustering sources: each model's test-split embeddings, plus the
    // pixel-space PCA + t-SNE pipeline.
    let mut sources: Vec<(String, Tensor<f64>, Vec<u32>)> = Vec::new();
    for block in &config.models {
        let (matrix, labels) =
            read_embeddings("cluster", &paths.embeddings(&block.name), "embed")?;
        sources.push((block.name.clone(), matrix, labels));
    }
    let pipeline_index = sources.len();
    {
        let raw = pixel_matrix(&test)?;
        let pca = match c.pca_components {
            Some(width) => PcaModel::fit(&raw, width)?,
            None => PcaModel::fit_default(&raw)?,
        };
        let reduced = pca.transform(&raw)?;
        let layout = tsne(&reduced, &tsne_config(c, 300 + pipeline_index as u64))?;
        sources.push((PIPELINE_SOURCE.to_string(), layout.layout, test.labels()));
    }

    let mut files = Vec::new();
    let mut silhouette_rows = Vec::new();
    for (i, (name, matrix, labels)) in sources.iter().enumerate() {
        let dim = matrix.shape()[1];
        let km_config = KmeansConfig::new(k)
            .with_seed(derive_seed(c.seed, 100 + i as u64))
            .with_restarts(c.kmeans_restarts);
        let km = kmeans(matrix, &km_config)?;
        let gm_config = GmmConfig::new(k).with_seed(derive_seed(c.seed, 200 + i as u64));
        let gm = gmm_fit(matrix, &gm_config)?;
        let gm_hard = gmm_assign(&gm)?;

        let sil_km = silhouette_score(matrix.data(), dim, &km.assignments)?;
        let sil_gm = silhouette_score(matrix.data(), dim, &gm_hard)?;
        silhouette_rows.push((name.clone(), sil_km, sil_gm));

        // A 2-D layout for the plots: sources that are already planar
        // (the pipeline source) are their own layout.
        let layout = if dim == 2 {
            matrix.clone()
        } else {
            tsne(matrix, &tsne_config(c, 300 + i as u64))?.layout
        };

        let layout_path = paths.layout(name);
        write_layout(&layout_path, &layout, labels)?;
        files.push(layout_path);

        let assign_path = paths.assignments(name);
        write_assignments(&assign_path, labels, &km.assignments, &gm_hard)?;
        files.push(assign_path);
    }

    let sil_path = paths.silhouette();
    write_silhouettes(&sil_path, &silhouette_rows)?;
    files.push(sil_path);
    Ok(files)
}

fn tsne_config(c: &crate::config::ClusteringConfig, stream: u64) -> TsneConfig {
    let mut config = TsneConfig::with_seed(derive_seed(c.seed, stream));
    config.perplexity = c.tsne_perplexity;
    config.iterations = c.tsne_iterations;
    config
}

fn stage_evaluate(config: &ExperimentConfig, paths: &RunPaths) -> Result<Vec<PathBuf>> {
    let test = load_test_subset("evaluate", paths)?;
    let mut files = Vec::new();
    for block in &config.models {
        let model = load_model_file("evaluate", &paths.model(&block.name), "train")?;
        let predicted = model.evaluate(&test)?;
        let path = paths.predictions(&block.name);
        write_predictions(&path, &test.labels(), &predicted)?;
        files.push(path);
    }
    Ok(files)
}

fn stage_report(config: &ExperimentConfig, paths: &RunPaths) -> Result<Vec<PathBuf>> {
    let parent = load_dataset_file("report", &paths.preprocessed(), "preprocess")?;
    let classes = parent.category_count();

    let mut accuracy_rows = Vec::new();
    for block in &config.models {
        let (actual, predicted) =
            read_predictions("report", &paths.predictions(&block.name), "evaluate")?;
        let report = classification_report(&actual, &predicted, classes)?;
        accuracy_rows.push(AccuracyRow::from_report(&block.name, &report));
    }

    let silhouette_rows: Vec<SilhouetteRow> =
        read_silhouettes("report", &paths.silhouette(), "cluster")?
            .into_iter()
            .map(|(source, kmeans, gmm)| SilhouetteRow {
                model: source,
                kmeans,
                gmm,
            })
            .collect();

    ensure_parent(&paths.table1_csv())?;
    let files = vec![
        paths.table1_csv(),
        paths.table1_md(),
        paths.table2_csv(),
        paths.table2_md(),
    ];
    write_text(&paths.table1_csv(), &accuracy_table_csv(&accuracy_rows))?;
    write_text(&paths.table1_md(), &accuracy_table_markdown(&accuracy_rows))?;
    write_text(&paths.table2_csv(), &silhouette_table_csv(&silhouette_rows))?;
    write_text(&paths.table2_md(), &silhouette_table_markdown(&silhouette_rows))?;
    Ok(files)
}

fn stage_visualize(config: &ExperimentConfig, paths: &RunPaths) -> Result<Vec<PathBuf>> {
    let mut sources: Vec<String> = config.model_names().iter().map(ToString::to_string).collect();
    sources.push(PIPELINE_SOURCE.to_string());

    let mut files = Vec::new();
    for source in &sources {
        let points = read_layout("visualize", &paths.layout(source), "cluster")?;
        let (_, _, km_assign, _) =
            read_assignments("visualize", &paths.assignments(source), "cluster")?;
        let clusters = km_assign.iter().copied().max().map_or(0, |m| m + 1);
        let names: Vec<String> = (0..clusters).map(|c| format!("cluster {c}")).collect();

        let plot_path = paths.plot(source);
        ensure_parent(&plot_path)?;
        write_scatter(
            &plot_path,
            &points,
            &km_assign,
            Some(&names),
            &format!("{source} embeddings, K-Means clusters"),
        )?;
        files.push(plot_path);
    }
    Ok(files)
}

// ---------------------------------------------------------------------
// Shared loading and small-format helpers.

fn require(stage: &'static str, path: &Path, producer: &'static str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::MissingArtifact {
            stage,
            path: path.to_path_buf(),
            producer,
        })
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn artifact_err(path: &Path, detail: impl Into<String>) -> CliError {
    CliError::Artifact {
        path: path.to_path_buf(),
        detail: detail.into(),
    }
}

fn save_dataset_file(path: &Path, ds: &LabeledDataset) -> Result<()> {
    ensure_parent(path)?;
    let mut out = BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?);
    save_dataset(ds, &mut out)?;
    Ok(())
}

fn load_dataset_file(
    stage: &'static str,
    path: &Path,
    producer: &'static str,
) -> Result<LabeledDataset> {
    require(stage, path, producer)?;
    let mut input = BufReader::new(File::open(path).map_err(|e| CliError::io(path, e))?);
    Ok(load_dataset(&mut input)?)
}

fn load_model_file(stage: &'static str, path: &Path, producer: &'static str) -> Result<SavedModel> {
    require(stage, path, producer)?;
    let mut input = BufReader::new(File::open(path).map_err(|e| CliError::io(path, e))?);
    Ok(load_model(&mut input)?)
}

fn load_test_subset(stage: &'static str, paths: &RunPaths) -> Result<LabeledDataset> {
    let parent = load_dataset_file(stage, &paths.preprocessed(), "preprocess")?;
    let indices = read_split(stage, &paths.split(), "preprocess")?;
    Ok(parent.subset(&indices.test)?)
}

/// Resize every sample to `side`×`side` when a target is configured;
/// datasets already at the target pass through untouched.
fn apply_resize(ds: LabeledDataset, resize: Option<usize>) -> Result<LabeledDataset> {
    let Some(side) = resize else { return Ok(ds) };
    let already = ds
        .samples()
        .iter()
        .all(|s| s.dims().0 == side && s.dims().1 == side);
    if already {
        return Ok(ds);
    }
    let names = ds.category_names().to_vec();
    let samples: Vec<ImageSample> = ds
        .samples()
        .iter()
        .map(|s| -> Result<ImageSample> {
            Ok(ImageSample {
                pixels: resize_bilinear(&s.pixels, side, side)?,
                label: s.label,
                source_id: s.source_id.clone(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(LabeledDataset::new(names, samples)?)
}

/// Flatten a dataset into an `[N, H*W*C]` double matrix for PCA.
fn pixel_matrix(ds: &LabeledDataset) -> Result<Tensor<f64>> {
    let all: Vec<usize> = (0..ds.len()).collect();
    let (batch, _) = ds.batch(&all)?;
    let n = batch.shape()[0];
    let dim: usize = batch.shape()[1..].iter().product();
    let data: Vec<f64> = batch.data().iter().map(|&v| f64::from(v)).collect();
    Ok(Tensor::from_vec(vec![n, dim], data).expect("flattening preserves the element count"))
}

fn write_split(path: &Path, indices: &SplitIndices) -> Result<()> {
    let mut text = String::new();
    for (name, part) in [
        ("train", &indices.train),
        ("val", &indices.val),
        ("test", &indices.test),
    ] {
        let joined = part
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(text, "{name} = {joined}").unwrap();
    }
    write_text(path, &text)
}

fn read_split(stage: &'static str, path: &Path, producer: &'static str) -> Result<SplitIndices> {
    require(stage, path, producer)?;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut parts: [Option<Vec<usize>>; 3] = [None, None, None];
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (name, values) = line
            .split_once('=')
            .ok_or_else(|| artifact_err(path, format!("expected `part = indices`, got `{line}`")))?;
        let slot = match name.trim() {
            "train" => 0,
            "val" => 1,
            "test" => 2,
            other => return Err(artifact_err(path, format!("unknown split part `{other}`"))),
        };
        let indices: Vec<usize> = values
            .split_whitespace()
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|e| artifact_err(path, format!("bad index `{v}`: {e}")))
            })
            .collect::<Result<_>>()?;
        parts[slot] = Some(indices);
    }
    let [train, val, test] = parts;
    match (train, val, test) {
        (Some(train), Some(val), Some(test)) => Ok(SplitIndices { train, val, test }),
        _ => Err(artifact_err(path, "missing one of train/val/test lines")),
    }
}

fn write_trace(path: &Path, trace: &[EpochStats]) -> Result<()> {
    let mut text = String::from("epoch,train_loss,val_accuracy\n");
    for s in trace {
        let val = s.val_accuracy.map(|v| v.to_string()).unwrap_or_default();
        writeln!(text, "{},{},{val}", s.epoch, s.train_loss).unwrap();
    }
    write_text(path, &text)
}

/// Embeddings go to CSV through `f32`'s shortest-round-trip `Display`,
/// so reading them back reproduces the exact bits.
fn write_embeddings(path: &Path, embeddings: &Tensor<f32>, labels: &[u32]) -> Result<()> {
    let dim = embeddings.shape()[1];
    let mut text = String::from("label");
    for j in 0..dim {
        write!(text, ",e{j}").unwrap();
    }
    text.push('\n');
    let rows = embeddings.data().chunks(dim);
    for (label, row) in labels.iter().zip(rows) {
        write!(text, "{label}").unwrap();
        for v in row {
            write!(text, ",{v}").unwrap();
        }
        text.push('\n');
    }
    write_text(path, &text)
}

fn read_embeddings(
    stage: &'static str,
    path: &Path,
    producer: &'static str,
) -> Result<(Tensor<f64>, Vec<u32>)> {
    require(stage, path, producer)?;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| artifact_err(path, "empty embeddings file"))?;
    if !header.starts_with("label,") {
        return Err(artifact_err(path, format!("unexpected header `{header}`")));
    }
    let dim = header.split(',').count() - 1;

    let mut labels = Vec::new();
    let mut data = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let mut fields = line.split(',');
        let label = fields
            .next()
            .and_then(|f| f.parse::<u32>().ok())
            .ok_or_else(|| artifact_err(path, format!("bad label in `{line}`")))?;
        labels.push(label);
        let before = data.len();
        for field in fields {
            let v: f32 = field
                .parse()
                .map_err(|e| artifact_err(path, format!("bad value `{field}`: {e}")))?;
            data.push(f64::from(v));
        }
        if data.len() - before != dim {
            return Err(artifact_err(
                path,
                format!("row has {} values, header promises {dim}", data.len() - before),
            ));
        }
    }
    let n = labels.len();
    let matrix = Tensor::from_vec(vec![n, dim], data)
        .map_err(|e| artifact_err(path, e.to_string()))?;
    Ok((matrix, labels))
}

fn write_layout(path: &Path, layout: &Tensor<f64>, labels: &[u32]) -> Result<()> {
    let mut text = String::from("label,x,y\n");
    for (label, row) in labels.iter().zip(layout.data().chunks(2)) {
        writeln!(text, "{label},{},{}", row[0], row[1]).unwrap();
    }
    write_text(path, &text)
}

fn read_layout(stage: &'static str, path: &Path, producer: &'static str) -> Result<Vec<(f64, f64)>> {
    require(stage, path, producer)?;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("label,x,y") {
        return Err(artifact_err(path, "unexpected layout header"));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            match fields.as_slice() {
                [_, x, y] => {
                    let x = x.parse().map_err(|e| artifact_err(path, format!("{e} in `{line}`")))?;
                    let y = y.parse().map_err(|e| artifact_err(path, format!("{e} in `{line}`")))?;
                    Ok((x, y))
                }
                _ => Err(artifact_err(path, format!("expected 3 fields, got `{line}`"))),
            }
        })
        .collect()
}

fn write_assignments(
    path: &Path,
    labels: &[u32],
    kmeans: &[usize],
    gmm: &[usize],
) -> Result<()> {
    let mut text = String::from("index,label,kmeans,gmm\n");
    for (i, ((label, km), gm)) in labels.iter().zip(kmeans).zip(gmm).enumerate() {
        writeln!(text, "{i},{label},{km},{gm}").unwrap();
    }
    write_text(path, &text)
}

type AssignmentColumns = (Vec<usize>, Vec<u32>, Vec<usize>, Vec<usize>);

fn read_assignments(
    stage: &'static str,
    path: &Path,
    producer: &'static str,
) -> Result<AssignmentColumns> {
    require(stage, path, producer)?;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("index,label,kmeans,gmm") {
        return Err(artifact_err(path, "unexpected assignments header"));
    }
    let mut indices = Vec::new();
    let mut labels = Vec::new();
    let mut km = Vec::new();
    let mut gm = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        let [i, label, k, g] = fields.as_slice() else {
            return Err(artifact_err(path, format!("expected 4 fields, got `{line}`")));
        };
        let bad = |e: String| artifact_err(path, format!("{e} in `{line}`"));
        indices.push(i.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?);
        labels.push(label.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?);
        km.push(k.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?);
        gm.push(g.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?);
    }
    Ok((indices, labels, km, gm))
}

/// Silhouette values are written full-precision: downstream ordering
/// comparisons shouldn't inherit display rounding.
fn write_silhouettes(path: &Path, rows: &[(String, f64, f64)]) -> Result<()> {
    let mut text = String::from("source,kmeans,gmm\n");
    for (source, km, gm) in rows {
        writeln!(text, "{source},{km},{gm}").unwrap();
    }
    write_text(path, &text)
}

fn read_silhouettes(
    stage: &'static str,
    path: &Path,
    producer: &'static str,
) -> Result<Vec<(String, f64, f64)>> {
    require(stage, path, producer)?;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("source,kmeans,gmm") {
        return Err(artifact_err(path, "unexpected silhouette header"));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            match fields.as_slice() {
                [source, km, gm] => {
                    let bad = |e: std::num::ParseFloatError| {
                        artifact_err(path, format!("{e} in `{line}`"))
                    };
                    Ok((source.to_string(), km.parse().map_err(bad)?, gm.parse().map_err(bad)?))
                }
                _ => Err(artifact_err(path, format!("expected 3 fields, got `{line}`"))),
            }
        })
        .collect()
}

fn write_predictions(path: &Path, labels: &[u32], predicted: &[usize]) -> Result<()> {
    let mut text = String::from("index,label,predicted\n");
    for (i, (label, pred)) in labels.iter().zip(predicted).enumerate() {
        writeln!(text, "{i},{label},{pred}").unwrap();
    }
    write_text(path, &text)
}

fn read_predictions(
    stage: &'static str,
    path: &Path,
    producer: &'static str,
) -> Result<(Vec<usize>, Vec<usize>)> {
    require(stage, path, producer)?;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("index,label,predicted") {
        return Err(artifact_err(path, "unexpected predictions header"));
    }
    let mut actual = Vec::new();
    let mut predicted = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let fields: Vec<&str> = line.split(',').collect();
        let [_, label, pred] = fields.as_slice() else {
            return Err(artifact_err(path, format!("expected 3 fields, got `{line}`")));
        };
        let bad = |e: std::num::ParseIntError| artifact_err(path, format!("{e} in `{line}`"));
        actual.push(label.parse().map_err(bad)?);
        predicted.push(pred.parse().map_err(bad)?);
    }
    Ok((actual, predicted))
}
