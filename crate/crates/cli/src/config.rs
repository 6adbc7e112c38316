//! Experiment configuration: a flat, line-oriented text format and the
//! typed structure it parses into.
//!
//! The format is `[section]` headers over `key = value` lines; blank
//! lines and lines starting with `#` are skipped. Sections are
//! `[dataset]`, `[preprocess]`, one `[model NAME]` per trained model,
//! `[clustering]`, and `[output]`. Unknown sections and keys are
//! errors — a typo should fail the run, not silently fall back to a
//! default. Every stochastic stage must name its seed explicitly.
//!
//! A config also has a canonical form: the same fields re-serialized
//! with every default resolved, in a fixed order, excluding the output
//! directory. Its SHA-256 is the run's identity — two configs with the
//! same hash produce byte-identical artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fsem_core::derive_seed;
use fsem_data::{AugmentParams, ColorMode, SplitRatios};
use fsem_models::{ModelKind, ModelRecipe};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};
use crate::synth::{ShapeKind, SynthSpec};

/// Reserved name for the pixel-space PCA + t-SNE clustering source; a
/// model block may not claim it.
pub const PIPELINE_SOURCE: &str = "pca-tsne";

/// Fully parsed and validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetConfig,
    pub preprocess: PreprocessConfig,
    pub models: Vec<ModelBlock>,
    pub clustering: ClusteringConfig,
    pub output_dir: PathBuf,
}

/// Where the target (and optional auxiliary) dataset comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetConfig {
    /// Procedurally rendered shapes. The auxiliary variant, when
    /// present, must use disjoint shape kinds; its sample stream is
    /// seeded from the target seed.
    Synthetic {
        target: SynthSpec,
        aux: Option<SynthSpec>,
    },
    /// Image directories laid out as `root/<category>/<files>`.
    Directory {
        path: PathBuf,
        aux_path: Option<PathBuf>,
        color: ColorMode,
    },
}

impl DatasetConfig {
    pub fn has_aux(&self) -> bool {
        match self {
            DatasetConfig::Synthetic { aux, .. } => aux.is_some(),
            DatasetConfig::Directory { aux_path, .. } => aux_path.is_some(),
        }
    }
}

/// Resize, expansion, and split policy applied before training.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    /// Target side length; images are resized square when set.
    pub resize: Option<usize>,
    /// Fraction of synthetic variants to append (0 disables).
    pub expansion: f64,
    pub augment: AugmentParams,
    pub ratios: SplitRatios,
    pub seed: u64,
}

/// One trained model: a unique name plus its full recipe.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBlock {
    pub name: String,
    pub recipe: ModelRecipe,
    /// Epochs for the auxiliary pretraining run of backbone-based
    /// kinds; defaults to the recipe's own epoch count.
    pub pretrain_epochs: Option<usize>,
}

impl ModelBlock {
    pub fn pretrain_epochs(&self) -> usize {
        self.pretrain_epochs.unwrap_or(self.recipe.epochs)
    }
}

/// Clustering-stage knobs shared by every embedding source.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringConfig {
    /// Cluster count; defaults to the dataset's category count.
    pub k: Option<usize>,
    /// PCA width for the pixel-space pipeline source; defaults to the
    /// library's capped default.
    pub pca_components: Option<usize>,
    pub tsne_perplexity: Option<f64>,
    pub tsne_iterations: usize,
    pub kmeans_restarts: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    /// Canonical serialization: every resolved field in a fixed order,
    /// output directory excluded. Equal canonical forms mean equal
    /// artifact bytes.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        let w = &mut out;

        writeln!(w, "[dataset]").unwrap();
        match &self.dataset {
            DatasetConfig::Synthetic { target, aux } => {
                writeln!(w, "source = synthetic").unwrap();
                write_synth(w, "", target);
                if let Some(aux) = aux {
                    write_synth(w, "aux_", aux);
                }
            }
            DatasetConfig::Directory {
                path,
                aux_path,
                color,
            } => {
                writeln!(w, "source = directory").unwrap();
                writeln!(w, "path = {}", path.display()).unwrap();
                if let Some(aux) = aux_path {
                    writeln!(w, "aux_path = {}", aux.display()).unwrap();
                }
                writeln!(w, "color = {}", color_name(*color)).unwrap();
            }
        }

        let p = &self.preprocess;
        writeln!(w, "[preprocess]").unwrap();
        match p.resize {
            Some(side) => writeln!(w, "resize = {side}").unwrap(),
            None => writeln!(w, "resize = none").unwrap(),
        }
        writeln!(w, "expansion = {}", p.expansion).unwrap();
        writeln!(w, "rotation_deg = {}", p.augment.rotation_deg).unwrap();
        writeln!(w, "shear = {}", p.augment.shear).unwrap();
        writeln!(w, "zoom = {},{}", p.augment.zoom_range.0, p.augment.zoom_range.1).unwrap();
        writeln!(w, "split = {},{},{}", p.ratios.train, p.ratios.val, p.ratios.test).unwrap();
        writeln!(w, "seed = {}", p.seed).unwrap();

        for block in &self.models {
            let r = &block.recipe;
            writeln!(w, "[model {}]", block.name).unwrap();
            writeln!(w, "kind = {}", r.kind).unwrap();
            writeln!(w, "conv_channels = {}", join_usizes(&r.conv_channels)).unwrap();
            writeln!(w, "linear_widths = {}", join_usizes(&r.linear_widths)).unwrap();
            writeln!(w, "embedding_dim = {}", r.embedding_dim).unwrap();
            writeln!(w, "epochs = {}", r.epochs).unwrap();
            writeln!(w, "batch_size = {}", r.batch_size).unwrap();
            writeln!(w, "learning_rate = {}", r.learning_rate).unwrap();
            match r.momentum {
                Some(m) => writeln!(w, "momentum = {m}").unwrap(),
                None => writeln!(w, "momentum = none").unwrap(),
            }
            writeln!(w, "margin = {}", r.margin).unwrap();
            writeln!(w, "pairs_per_epoch_factor = {}", r.pairs_per_epoch_factor).unwrap();
            writeln!(w, "positive_ratio = {}", r.positive_ratio).unwrap();
            if r.kind.uses_backbone() {
                writeln!(w, "pretrain_epochs = {}", block.pretrain_epochs()).unwrap();
            }
            writeln!(w, "seed = {}", r.seed).unwrap();
        }

        let c = &self.clustering;
        writeln!(w, "[clustering]").unwrap();
        match c.k {
            Some(k) => writeln!(w, "k = {k}").unwrap(),
            None => writeln!(w, "k = categories").unwrap(),
        }
        match c.pca_components {
            Some(n) => writeln!(w, "pca_components = {n}").unwrap(),
            None => writeln!(w, "pca_components = default").unwrap(),
        }
        match c.tsne_perplexity {
            Some(p) => writeln!(w, "tsne_perplexity = {p}").unwrap(),
            None => writeln!(w, "tsne_perplexity = default").unwrap(),
        }
        writeln!(w, "tsne_iterations = {}", c.tsne_iterations).unwrap();
        writeln!(w, "kmeans_restarts = {}", c.kmeans_restarts).unwrap();
        writeln!(w, "seed = {}", c.seed).unwrap();

        out
    }

    /// SHA-256 of the canonical form, in lowercase hex.
    pub fn hash_hex(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical().as_bytes());
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in digest {
            write!(hex, "{byte:02x}").unwrap();
        }
        hex
    }

    /// Replace every stage seed with one derived from `base`, each
    /// stage on its own stream. One flag thus reseeds the whole run
    /// while stages stay mutually independent.
    pub fn override_seed(&mut self, base: u64) {
        match &mut self.dataset {
            DatasetConfig::Synthetic { target, aux } => {
                target.seed = derive_seed(base, 1);
                if let Some(aux) = aux {
                    aux.seed = derive_seed(target.seed, AUX_SEED_STREAM);
                }
            }
            DatasetConfig::Directory { .. } => {}
        }
        self.preprocess.seed = derive_seed(base, 2);
        self.clustering.seed = derive_seed(base, 3);
        for (i, block) in self.models.iter_mut().enumerate() {
            block.recipe.seed = derive_seed(base, 16 + i as u64);
        }
    }

    pub fn model_names(&self) -> Vec<&str> {
        self.models.iter().map(|b| b.name.as_str()).collect()
    }

    fn validate(&self) -> Result<()> {
        let fail = |detail: String| {
            Err(CliError::Config {
                location: "config".into(),
                detail,
            })
        };

        if self.models.is_empty() {
            return fail("at least one [model NAME] block is required".into());
        }
        for (i, block) in self.models.iter().enumerate() {
            if block.name.is_empty()
                || !block
                    .name
                    .chars()
                    .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '_')
            {
                return fail(format!(
                    "model name `{}` must be lowercase letters, digits, `-` or `_`",
                    block.name
                ));
            }
            if block.name == PIPELINE_SOURCE {
                return fail(format!("model name `{PIPELINE_SOURCE}` is reserved"));
            }
            if self.models[..i].iter().any(|b| b.name == block.name) {
                return fail(format!("model name `{}` used twice", block.name));
            }
            if block.recipe.kind.uses_backbone() && !self.dataset.has_aux() {
                return fail(format!(
                    "model `{}` needs an auxiliary dataset for pretraining; \
                     add aux_kinds (synthetic) or aux_path (directory)",
                    block.name
                ));
            }
            if block.pretrain_epochs.is_some() && !block.recipe.kind.uses_backbone() {
                return fail(format!(
                    "model `{}` sets pretrain_epochs but kind `{}` never pretrains",
                    block.name, block.recipe.kind
                ));
            }
        }

        if let DatasetConfig::Synthetic { target, aux } = &self.dataset {
            target.validate()?;
            if let Some(aux) = aux {
                aux.validate()?;
                if let Some(shared) = aux.kinds.iter().find(|k| target.kinds.contains(k)) {
                    return fail(format!(
                        "auxiliary kind `{shared}` also appears in the target kinds; \
                         pretraining categories must be disjoint"
                    ));
                }
            }
        }

        if !(0.0..=10.0).contains(&self.preprocess.expansion) {
            return fail(format!(
                "expansion {} outside [0, 10]",
                self.preprocess.expansion
            ));
        }
        self.preprocess.augment.validate()?;
        self.preprocess.ratios.validate()?;
        if let Some(side) = self.preprocess.resize {
            if side == 0 {
                return fail("resize side must be positive".into());
            }
        }

        let c = &self.clustering;
        if let Some(k) = c.k {
            if k < 2 {
                return fail(format!("clustering k = {k} but at least 2 clusters are needed"));
            }
        }
        if c.tsne_iterations == 0 {
            return fail("tsne_iterations must be positive".into());
        }
        if c.kmeans_restarts == 0 {
            return fail("kmeans_restarts must be positive".into());
        }

        Ok(())
    }
}

/// Stream index separating the auxiliary dataset's sample stream from
/// the target's when both render from one configured seed.
pub const AUX_SEED_STREAM: u64 = 0xA0;

fn write_synth(w: &mut String, prefix: &str, spec: &SynthSpec) {
    let kinds: Vec<&str> = spec.kinds.iter().map(|k| k.name()).collect();
    writeln!(w, "{prefix}kinds = {}", kinds.join(",")).unwrap();
    writeln!(w, "{prefix}per_category = {}", spec.per_category).unwrap();
    writeln!(w, "{prefix}side = {}", spec.side).unwrap();
    writeln!(w, "{prefix}noise = {}", spec.noise).unwrap();
    writeln!(w, "{prefix}jitter = {}", spec.jitter).unwrap();
    writeln!(w, "{prefix}seed = {}", spec.seed).unwrap();
}

fn color_name(color: ColorMode) -> &'static str {
    match color {
        ColorMode::Grayscale => "grayscale",
        ColorMode::Keep => "keep",
    }
}

fn join_usizes(values: &[usize]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Read and parse a config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text, &path.display().to_string())
}

/// Parse config text; `origin` names the source in error messages.
pub fn parse_config(text: &str, origin: &str) -> Result<ExperimentConfig> {
    let sections = split_sections(text, origin)?;

    let mut dataset = None;
    let mut preprocess = None;
    let mut clustering = None;
    let mut output_dir = None;
    let mut models = Vec::new();

    fn once<T>(slot: &Option<T>, reader: &SectionReader) -> Result<()> {
        if slot.is_some() {
            Err(reader.err(reader.line, "section appears twice"))
        } else {
            Ok(())
        }
    }

    for section in sections {
        let mut reader = SectionReader::new(origin, section);
        match reader.name.as_str() {
            "dataset" => {
                once(&dataset, &reader)?;
                dataset = Some(read_dataset(&mut reader)?);
            }
            "preprocess" => {
                once(&preprocess, &reader)?;
                preprocess = Some(read_preprocess(&mut reader)?);
            }
            "model" => models.push(read_model(&mut reader)?),
            "clustering" => {
                once(&clustering, &reader)?;
                clustering = Some(read_clustering(&mut reader)?);
            }
            "output" => {
                once(&output_dir, &reader)?;
                let dir = reader.require("dir")?;
                output_dir = Some(PathBuf::from(dir.value));
                reader.finish()?;
            }
            other => {
                return Err(reader.err(reader.line, &format!("unknown section `[{other}]`")));
            }
        }
    }

    let missing = |name: &str| CliError::Config {
        location: origin.to_string(),
        detail: format!("missing required section `[{name}]`"),
    };
    let config = ExperimentConfig {
        dataset: dataset.ok_or_else(|| missing("dataset"))?,
        preprocess: preprocess.ok_or_else(|| missing("preprocess"))?,
        models,
        clustering: clustering.ok_or_else(|| missing("clustering"))?,
        output_dir: output_dir.ok_or_else(|| missing("output"))?,
    };
    config.validate()?;
    Ok(config)
}

fn read_dataset(r: &mut SectionReader) -> Result<DatasetConfig> {
    let source = r.require("source")?;
    let config = match source.value.as_str() {
        "synthetic" => {
            let target = read_synth_spec(r, "")?;
            let aux = if r.peek("aux_kinds") {
                let mut aux = read_synth_spec_with_defaults(r, "aux_", &target)?;
                aux.seed = derive_seed(target.seed, AUX_SEED_STREAM);
                Some(aux)
            } else {
                None
            };
            DatasetConfig::Synthetic { target, aux }
        }
        "directory" => {
            let path = PathBuf::from(r.require("path")?.value);
            let aux_path = r.take("aux_path").map(|e| PathBuf::from(e.value));
            let color = match r.take("color") {
                None => ColorMode::Grayscale,
                Some(e) if e.value == "grayscale" => ColorMode::Grayscale,
                Some(e) if e.value == "keep" => ColorMode::Keep,
                Some(e) => {
                    return Err(r.err(e.line, &format!("unknown color mode `{}`", e.value)))
                }
            };
            DatasetConfig::Directory {
                path,
                aux_path,
                color,
            }
        }
        other => {
            return Err(r.err(
                source.line,
                &format!("unknown source `{other}` (expected synthetic or directory)"),
            ))
        }
    };
    r.finish()?;
    Ok(config)
}

fn read_synth_spec(r: &mut SectionReader, prefix: &str) -> Result<SynthSpec> {
    Ok(SynthSpec {
        kinds: read_kind_list(r, &format!("{prefix}kinds"))?,
        per_category: r.require_parsed(&format!("{prefix}per_category"))?,
        side: r.parsed_or(&format!("{prefix}side"), 32)?,
        noise: r.parsed_or(&format!("{prefix}noise"), 0.0)?,
        jitter: r.parsed_or(&format!("{prefix}jitter"), 0.0)?,
        seed: r.require_parsed(&format!("{prefix}seed"))?,
    })
}

/// Aux spec: same knobs, but unspecified values inherit the target's.
/// The aux seed is always derived from the target seed.
fn read_synth_spec_with_defaults(
    r: &mut SectionReader,
    prefix: &str,
    target: &SynthSpec,
) -> Result<SynthSpec> {
    Ok(SynthSpec {
        kinds: read_kind_list(r, &format!("{prefix}kinds"))?,
        per_category: r.parsed_or(&format!("{prefix}per_category"), target.per_category)?,
        side: target.side,
        noise: r.parsed_or(&format!("{prefix}noise"), target.noise)?,
        jitter: r.parsed_or(&format!("{prefix}jitter"), target.jitter)?,
        seed: 0, // overwritten by the caller
    })
}

fn read_kind_list(r: &mut SectionReader, key: &str) -> Result<Vec<ShapeKind>> {
    let entry = r.require(key)?;
    let mut kinds = Vec::new();
    for part in entry.value.split(',') {
        let kind = ShapeKind::from_str(part.trim()).map_err(|e| r.err(entry.line, &e))?;
        kinds.push(kind);
    }
    Ok(kinds)
}

fn read_preprocess(r: &mut SectionReader) -> Result<PreprocessConfig> {
    let resize = match r.take("resize") {
        None => None,
        Some(e) if e.value == "none" => None,
        Some(e) => Some(
            e.value
                .parse::<usize>()
                .map_err(|err| r.err(e.line, &format!("resize: {err}")))?,
        ),
    };

    let mut augment = AugmentParams::default();
    if let Some(v) = r.parsed("rotation_deg")? {
        augment.rotation_deg = v;
    }
    if let Some(v) = r.parsed("shear")? {
        augment.shear = v;
    }
    if let Some(e) = r.take("zoom") {
        augment.zoom_range = parse_pair(&e.value).ok_or_else(|| {
            r.err(e.line, &format!("zoom wants `lo,hi`, got `{}`", e.value))
        })?;
    }

    let ratios = match r.take("split") {
        None => SplitRatios::default(),
        Some(e) => {
            let parts: Vec<&str> = e.value.split(',').map(str::trim).collect();
            let parsed: Option<Vec<f64>> = parts.iter().map(|p| p.parse().ok()).collect();
            match parsed.as_deref() {
                Some([train, val, test]) => SplitRatios {
                    train: *train,
                    val: *val,
                    test: *test,
                },
                _ => {
                    return Err(r.err(
                        e.line,
                        &format!("split wants `train,val,test`, got `{}`", e.value),
                    ))
                }
            }
        }
    };

    let config = PreprocessConfig {
        resize,
        expansion: r.parsed_or("expansion", 0.0)?,
        augment,
        ratios,
        seed: r.require_parsed("seed")?,
    };
    r.finish()?;
    Ok(config)
}

fn read_model(r: &mut SectionReader) -> Result<ModelBlock> {
    let name = match &r.arg {
        Some(arg) => arg.clone(),
        None => {
            return Err(r.err(r.line, "model section needs a name: `[model NAME]`"));
        }
    };

    let kind_entry = r.require("kind")?;
    let kind = ModelKind::from_str(&kind_entry.value)
        .map_err(|e| r.err(kind_entry.line, &e.to_string()))?;

    let mut recipe = ModelRecipe::new(kind);
    if let Some(v) = r.parsed_list("conv_channels")? {
        recipe.conv_channels = v;
    }
    if let Some(v) = r.parsed_list("linear_widths")? {
        recipe.linear_widths = v;
    }
    if let Some(v) = r.parsed("embedding_dim")? {
        recipe.embedding_dim = v;
    }
    if let Some(v) = r.parsed("epochs")? {
        recipe.epochs = v;
    }
    if let Some(v) = r.parsed("batch_size")? {
        recipe.batch_size = v;
    }
    if let Some(v) = r.parsed("learning_rate")? {
        recipe.learning_rate = v;
    }
    match r.take("momentum") {
        None => {}
        Some(e) if e.value == "none" => recipe.momentum = None,
        Some(e) => {
            let m: f64 = e
                .value
                .parse()
                .map_err(|err| r.err(e.line, &format!("momentum: {err}")))?;
            recipe.momentum = Some(m);
        }
    }
    if let Some(v) = r.parsed("margin")? {
        recipe.margin = v;
    }
    if let Some(v) = r.parsed("pairs_per_epoch_factor")? {
        recipe.pairs_per_epoch_factor = v;
    }
    if let Some(v) = r.parsed("positive_ratio")? {
        recipe.positive_ratio = v;
    }
    recipe.seed = r.require_parsed("seed")?;
    let pretrain_epochs = r.parsed("pretrain_epochs")?;

    recipe.validate().map_err(|e| {
        r.err(
            r.line,
            &format!("model `{name}` recipe invalid: {e}"),
        )
    })?;

    r.finish()?;
    Ok(ModelBlock {
        name,
        recipe,
        pretrain_epochs,
    })
}

fn read_clustering(r: &mut SectionReader) -> Result<ClusteringConfig> {
    let k = match r.take("k") {
        None => None,
        Some(e) if e.value == "categories" => None,
        Some(e) => Some(
            e.value
                .parse::<usize>()
                .map_err(|err| r.err(e.line, &format!("k: {err}")))?,
        ),
    };
    let config = ClusteringConfig {
        k,
        pca_components: r.parsed("pca_components")?,
        tsne_perplexity: r.parsed("tsne_perplexity")?,
        tsne_iterations: r.parsed_or("tsne_iterations", 1000)?,
        kmeans_restarts: r.parsed_or("kmeans_restarts", 8)?,
        seed: r.require_parsed("seed")?,
    };
    r.finish()?;
    Ok(config)
}

fn parse_pair(value: &str) -> Option<(f64, f64)> {
    let (lo, hi) = value.split_once(',')?;
    Some((lo.trim().parse().ok()?, hi.trim().parse().ok()?))
}

// ---------------------------------------------------------------------
// Raw line scanning.

#[derive(Debug)]
struct RawEntry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Debug)]
struct RawSection {
    name: String,
    arg: Option<String>,
    line: usize,
    entries: Vec<RawEntry>,
}

fn split_sections(text: &str, origin: &str) -> Result<Vec<RawSection>> {
    let err = |line: usize, detail: String| CliError::Config {
        location: format!("{origin}:{line}"),
        detail,
    };

    let mut sections: Vec<RawSection> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }

        if let Some(header) = trimmed.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| err(line, format!("unterminated section header `{trimmed}`")))?
                .trim();
            let (name, arg) = match header.split_once(' ') {
                Some((name, arg)) => (name.to_string(), Some(arg.trim().to_string())),
                None => (header.to_string(), None),
            };
            if name.is_empty() {
                return Err(err(line, "empty section name".into()));
            }
            sections.push(RawSection {
                name,
                arg,
                line,
                entries: Vec::new(),
            });
            continue;
        }

        let section = sections
            .last_mut()
            .ok_or_else(|| err(line, format!("`{trimmed}` appears before any [section]")))?;
        let (key, value) = trimmed
            .split_once('=')
            .ok_or_else(|| err(line, format!("expected `key = value`, got `{trimmed}`")))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(err(line, "empty key".into()));
        }
        if value.is_empty() {
            return Err(err(line, format!("key `{key}` has an empty value")));
        }
        if section.entries.iter().any(|e| e.key == key) {
            return Err(err(line, format!("key `{key}` set twice in this section")));
        }
        section.entries.push(RawEntry { key, value, line });
    }

    Ok(sections)
}

/// Pulls typed values out of one raw section and complains about
/// whatever is left over, so misspelled keys can't pass silently.
struct SectionReader {
    origin: String,
    name: String,
    arg: Option<String>,
    line: usize,
    entries: Vec<RawEntry>,
}

impl SectionReader {
    fn new(origin: &str, section: RawSection) -> Self {
        Self {
            origin: origin.to_string(),
            name: section.name,
            arg: section.arg,
            line: section.line,
            entries: section.entries,
        }
    }

    fn err(&self, line: usize, detail: &str) -> CliError {
        CliError::Config {
            location: format!("{}:{line}", self.origin),
            detail: format!("[{}] {detail}", self.describe()),
        }
    }

    fn describe(&self) -> String {
        match &self.arg {
            Some(arg) => format!("{} {arg}", self.name),
            None => self.name.clone(),
        }
    }

    fn peek(&self, key: &str) -> bool {
        self.entries.iter().any(|e| e.key == key)
    }

    fn take(&mut self, key: &str) -> Option<RawEntry> {
        let at = self.entries.iter().position(|e| e.key == key)?;
        Some(self.entries.remove(at))
    }

    fn require(&mut self, key: &str) -> Result<RawEntry> {
        self.take(key)
            .ok_or_else(|| self.err(self.line, &format!("missing required key `{key}`")))
    }

    fn parsed<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<T>()
                .map(Some)
                .map_err(|err| self.err(e.line, &format!("{key}: {err}"))),
        }
    }

    fn parsed_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn require_parsed<T: FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let e = self.require(key)?;
        e.value
            .parse::<T>()
            .map_err(|err| self.err(e.line, &format!("{key}: {err}")))
    }

    fn parsed_list<T: FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take(key) {
            None => Ok(None),
            Some(e) => {
                let mut values = Vec::new();
                for part in e.value.split(',') {
                    let v = part
                        .trim()
                        .parse::<T>()
                        .map_err(|err| self.err(e.line, &format!("{key}: {err}")))?;
                    values.push(v);
                }
                Ok(Some(values))
            }
        }
    }

    fn finish(&self) -> Result<()> {
        match self.entries.first() {
            None => Ok(()),
            Some(stray) => Err(CliError::Config {
                location: format!("{}:{}", self.origin, stray.line),
                detail: format!("[{}] unknown key `{}`", self.describe(), stray.key),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# shapes benchmark, five model families
[dataset]
source = synthetic
kinds = disk, cross, ring
per_category = 150
noise = 0.1
jitter = 0.6
seed = 11
aux_kinds = square, triangle, bars
aux_per_category = 100

[preprocess]
expansion = 0.1
seed = 22

[model lr]
kind = logistic-regression
epochs = 5
seed = 33

[model st]
kind = siamese-transfer
epochs = 4
pretrain_epochs = 2
seed = 44

[clustering]
seed = 55

[output]
dir = out/run1
";

    #[test]
    fn parses_the_sample_and_resolves_defaults() {
        let config = parse_config(SAMPLE, "sample").unwrap();
        match &config.dataset {
            DatasetConfig::Synthetic { target, aux } => {
                assert_eq!(target.kinds.len(), 3);
                assert_eq!(target.side, 32);
                let aux = aux.as_ref().unwrap();
                assert_eq!(aux.per_category, 100);
                assert_eq!(aux.noise, target.noise);
                assert_eq!(aux.seed, derive_seed(11, AUX_SEED_STREAM));
            }
            other => panic!("wrong dataset: {other:?}"),
        }
        assert_eq!(config.preprocess.expansion, 0.1);
        assert_eq!(config.preprocess.ratios, SplitRatios::default());
        assert_eq!(config.model_names(), ["lr", "st"]);
        assert_eq!(config.models[1].pretrain_epochs(), 2);
        assert_eq!(config.clustering.tsne_iterations, 1000);
        assert_eq!(config.output_dir, PathBuf::from("out/run1"));
    }

    #[test]
    fn unknown_keys_and_sections_fail_with_line_numbers() {
        let with_typo = SAMPLE.replace("expansion = 0.1", "expnasion = 0.1");
        let err = parse_config(&with_typo, "t").unwrap_err().to_string();
        assert!(err.contains("expnasion"), "{err}");
        assert!(err.contains("t:13"), "{err}");

        let with_section = format!("{SAMPLE}\n[plotting]\nstyle = dark\n");
        let err = parse_config(&with_section, "t").unwrap_err().to_string();
        assert!(err.contains("plotting"), "{err}");
    }

    #[test]
    fn duplicate_model_names_and_shared_aux_kinds_are_rejected() {
        let dup = SAMPLE.replace("[model st]", "[model lr]");
        assert!(parse_config(&dup, "t").is_err());

        let shared = SAMPLE.replace("aux_kinds = square, triangle, bars", "aux_kinds = disk, square");
        let err = parse_config(&shared, "t").unwrap_err().to_string();
        assert!(err.contains("disjoint"), "{err}");
    }

    #[test]
    fn backbone_kinds_demand_an_auxiliary_dataset() {
        let no_aux = SAMPLE
            .replace("aux_kinds = square, triangle, bars\n", "")
            .replace("aux_per_category = 100\n", "");
        let err = parse_config(&no_aux, "t").unwrap_err().to_string();
        assert!(err.contains("auxiliary"), "{err}");
    }

    #[test]
    fn missing_seeds_are_errors_not_defaults() {
        let no_seed = SAMPLE.replace("[clustering]\nseed = 55", "[clustering]\nk = 3");
        let err = parse_config(&no_seed, "t").unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
    }

    #[test]
    fn hash_ignores_output_dir_but_tracks_every_knob() {
        let base = parse_config(SAMPLE, "t").unwrap();
        let moved = parse_config(&SAMPLE.replace("out/run1", "elsewhere"), "t").unwrap();
        assert_eq!(base.hash_hex(), moved.hash_hex());

        let tweaked = parse_config(&SAMPLE.replace("noise = 0.1", "noise = 0.2"), "t").unwrap();
        assert_ne!(base.hash_hex(), tweaked.hash_hex());
    }

    #[test]
    fn seed_override_reseeds_every_stage_distinctly() {
        let mut config = parse_config(SAMPLE, "t").unwrap();
        config.override_seed(99);
        let DatasetConfig::Synthetic { target, aux } = &config.dataset else {
            panic!("synthetic expected")
        };
        let mut seeds = vec![
            target.seed,
            aux.as_ref().unwrap().seed,
            config.preprocess.seed,
            config.clustering.seed,
        ];
        seeds.extend(config.models.iter().map(|b| b.recipe.seed));
        let before = seeds.len();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), before, "stage seeds collide");
    }
}
