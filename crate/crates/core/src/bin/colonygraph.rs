use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use colonygraph::campaign::pipeline::{self, AnalysisConfig};
use colonygraph::campaign::{run_campaign, Campaign, CampaignConfig, Experiment1Config};
use colonygraph::encoder::TrainConfig;

#[derive(Parser)]
#[command(name = "colonygraph", version, about = "Colony nest-site simulations and their collective-state graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Table2,
    Experiment1,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign: trajectory logs, subgraphs, merged graph, metrics.
    Simulate {
        #[arg(long, value_enum, default_value = "table2")]
        preset: Preset,
        /// TOML file overriding the preset's settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rebuild the merged graph and its largest component from trajectory logs.
    Graph {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the encoder on a campaign's subgraph samples.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// TOML file with training settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Weight initialization seed.
        #[arg(long, default_value_t = 0)]
        model_seed: u64,
    },
    /// Embed every node of a graph with a trained model.
    Embed {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Success probabilities, labels, metric tables and 2D clusters.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// TOML file with t-SNE and clustering settings.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Plot-ready CSV tables.
    Export {
        #[arg(long)]
        input: PathBuf,
        /// Output directory of `analyze`.
        #[arg(long)]
        analysis: Option<PathBuf>,
        /// `embeddings.csv` written by `embed`.
        #[arg(long)]
        embeddings: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn print<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Simulate { preset, config, seed, workers, out } => {
            let mut campaign = match (preset, config) {
                (Preset::Table2, None) => Campaign::Table2(CampaignConfig::default()),
                (Preset::Table2, Some(p)) => Campaign::Table2(CampaignConfig::load(&p)?),
                (Preset::Experiment1, None) => Campaign::Experiment1(Experiment1Config::default()),
                (Preset::Experiment1, Some(p)) => Campaign::Experiment1(read_toml(&p)?),
            };
            if let Some(s) = seed {
                campaign = campaign.with_seed(s);
            }
            print(&run_campaign(&campaign, &out, workers)?)
        }
        Command::Graph { input, out } => print(&pipeline::build_graph(&input, &out)?),
        Command::Train { input, out, config, seed, epochs, model_seed } => {
            let mut cfg: TrainConfig = match config {
                Some(p) => read_toml(&p)?,
                None => TrainConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            let outcome = pipeline::train_models(&input, &out, &cfg, model_seed)?;
            print(&serde_json::json!({
                "samples": outcome.samples,
                "initial_loss": outcome.report.initial_loss,
                "final_loss": outcome.report.history.last(),
                "holdout": outcome.holdout,
            }))
        }
        Command::Embed { graph, model, out } => {
            let n = pipeline::embed(&graph, &model, &out)?;
            print(&serde_json::json!({ "nodes": n }))
        }
        Command::Analyze { input, out, config, seed } => {
            let mut cfg: AnalysisConfig = match config {
                Some(p) => read_toml(&p)?,
                None => AnalysisConfig::default(),
            };
            if let Some(s) = seed {
                cfg.tsne.seed = s;
            }
            print(&pipeline::analyze(&input, &out, &cfg)?)
        }
        Command::Export { input, analysis, embeddings, out } => {
            let files = pipeline::export(&input, analysis.as_deref(), embeddings.as_deref(), &out)?;
            print(&files)
        }
    }
}
