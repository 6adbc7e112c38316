//! `fsem` — run few-shot embedding experiments from a config file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fsem_cli::config::{load_config, DatasetConfig};
use fsem_cli::error::CliError;
use fsem_cli::pipeline::{run_experiment, run_stage, Stage};

#[derive(Parser)]
#[command(
    name = "fsem",
    version,
    about = "Few-shot embedding experiments: train five model families on one dataset, \
             then embed, cluster, score, and plot"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args)]
struct CommonArgs {
    /// Experiment config file
    #[arg(long)]
    config: PathBuf,

    /// Reseed the whole run: every stage seed in the config is
    /// replaced by one derived from this value
    #[arg(long)]
    seed: Option<u64>,

    /// Write artifacts here instead of the config's output dir
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Load an image directory dataset, then preprocess and split it
    Ingest(CommonArgs),
    /// Render the synthetic shapes dataset, then preprocess and split it
    Synth(CommonArgs),
    /// Train every model block from the persisted split
    Train(CommonArgs),
    /// Write test-split embeddings for every trained model
    Embed(CommonArgs),
    /// Cluster every embedding source and score silhouettes
    Cluster(CommonArgs),
    /// Write per-model test-split predictions
    Evaluate(CommonArgs),
    /// Render the accuracy and cluster-quality tables
    Report(CommonArgs),
    /// Plot each source's 2-D layout colored by K-Means cluster
    Visualize(CommonArgs),
    /// Run the full pipeline and write the artifact manifest
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Re-run one stage against existing artifacts instead of the
    /// whole pipeline
    #[arg(long)]
    stage: Option<Stage>,
}

enum Plan {
    Full,
    Stages(Vec<Stage>),
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: Cli) -> fsem_cli::Result<()> {
    // `wants_synthetic` guards against pointing `synth` at a directory
    // config (or `ingest` at a synthetic one) by accident.
    let (common, plan, wants_synthetic) = match cli.command {
        Command::Ingest(args) => (
            args,
            Plan::Stages(vec![Stage::Dataset, Stage::Preprocess]),
            Some(false),
        ),
        Command::Synth(args) => (
            args,
            Plan::Stages(vec![Stage::Dataset, Stage::Preprocess]),
            Some(true),
        ),
        Command::Train(args) => (args, Plan::Stages(vec![Stage::Train]), None),
        Command::Embed(args) => (args, Plan::Stages(vec![Stage::Embed]), None),
        Command::Cluster(args) => (args, Plan::Stages(vec![Stage::Cluster]), None),
        Command::Evaluate(args) => (args, Plan::Stages(vec![Stage::Evaluate]), None),
        Command::Report(args) => (args, Plan::Stages(vec![Stage::Report]), None),
        Command::Visualize(args) => (args, Plan::Stages(vec![Stage::Visualize]), None),
        Command::Run(args) => {
            let plan = match args.stage {
                Some(stage) => Plan::Stages(vec![stage]),
                None => Plan::Full,
            };
            (args.common, plan, None)
        }
    };

    let mut config = load_config(&common.config)?;

    if let Some(wants_synthetic) = wants_synthetic {
        let is_synthetic = matches!(config.dataset, DatasetConfig::Synthetic { .. });
        if wants_synthetic != is_synthetic {
            let (ran, should) = if is_synthetic {
                ("ingest", "synth")
            } else {
                ("synth", "ingest")
            };
            return Err(CliError::Config {
                location: common.config.display().to_string(),
                detail: format!(
                    "dataset source doesn't match the `{ran}` subcommand; use `fsem {should}`"
                ),
            });
        }
    }

    if let Some(seed) = common.seed {
        config.override_seed(seed);
    }
    if let Some(out) = common.out {
        config.output_dir = out;
    }
    let root = config.output_dir.clone();

    match plan {
        Plan::Full => {
            let manifest = run_experiment(&config, &root)?;
            for stage in &manifest.stages {
                println!(
                    "stage {}: {} artifacts in {} ms",
                    stage.name,
                    stage.artifacts.len(),
                    stage.wall_ms
                );
            }
            println!("manifest: {}", root.join("manifest.txt").display());
        }
        Plan::Stages(stages) => {
            for stage in stages {
                let files = run_stage(&config, &root, stage)?;
                println!("stage {}: {} artifacts", stage.name(), files.len());
            }
        }
    }
    Ok(())
}
