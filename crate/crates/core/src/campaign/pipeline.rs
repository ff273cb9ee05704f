//! The steps behind each CLI subcommand. Every step reads its inputs, writes
//! into its own output directory and leaves a manifest there.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::Campaign;
use super::manifest::Manifest;
use super::run::MetricsRow;
use crate::abm::{read_trajectory_log, TrialMeta};
use crate::analysis::{
    aggregate_metrics, apply_labels, kmeans, label_nodes, success_probability, tsne_2d, AggregateRow, NodeLabel,
    Spread, TsneConfig,
};
use crate::codec::{CodecSettings, DEFAULT_MAX_AGENTS};
use crate::encoder::{
    embed_graph, holdout_scores, roc_auc, split_edges, train, EncoderModel, GraphInput, TrainConfig, TrainReport,
};
use crate::graph::CollectiveGraph;
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn sorted_entries(dir: &Path, suffix: &str) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.to_string_lossy().ends_with(suffix) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Cell directories in run order when a manifest says so, else by name.
fn cell_dirs(input: &Path) -> Result<Vec<PathBuf>> {
    let cells = input.join("cells");
    if let Ok(m) = Manifest::load(input) {
        if !m.completed_cells.is_empty() {
            return Ok(m.completed_cells.iter().map(|c| cells.join(c)).collect());
        }
    }
    let mut dirs = Vec::new();
    if cells.is_dir() {
        for entry in fs::read_dir(&cells).map_err(|e| Error::io(&cells, e))? {
            let path = entry.map_err(|e| Error::io(&cells, e))?.path();
            if path.is_dir() {
                dirs.push(path);
            }
        }
    }
    dirs.sort();
    Ok(dirs)
}

pub fn load_campaign(input: &Path) -> Result<Campaign> {
    let path = input.join("campaign.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn codec_settings(campaign: &Campaign) -> CodecSettings {
    let agents = match campaign {
        Campaign::Table2(c) => c.agents.iter().copied().max().unwrap_or(0),
        Campaign::Experiment1(c) => c.agents,
    };
    CodecSettings { encoding: campaign.encoding(), max_agents: agents.max(DEFAULT_MAX_AGENTS) }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?).map_err(|e| Error::io(path, e))
}

fn finish(out: &Path, command: &str, seed: Option<u64>, files: &[&str]) -> Result<()> {
    let mut m = Manifest::new(command, seed);
    for f in files {
        m.add(out, f)?;
    }
    m.complete = true;
    m.save(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphReport {
    pub trajectories: usize,
    pub nodes: usize,
    pub edges: usize,
    pub component_nodes: usize,
}

/// Rebuilds the merged graph from a campaign's trajectory logs, plus its
/// largest weakly connected component.
pub fn build_graph(input: &Path, out: &Path) -> Result<GraphReport> {
    let campaign = load_campaign(input)?;
    let settings = codec_settings(&campaign);
    let mut graph = CollectiveGraph::new(settings.encoding);
    for cell in cell_dirs(input)? {
        for meta_path in sorted_entries(&cell.join("trials"), ".meta.json")? {
            let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
            let meta: TrialMeta = serde_json::from_str(&text)?;
            let name = meta_path.to_string_lossy().trim_end_matches(".meta.json").to_string();
            let t = read_trajectory_log(Path::new(&format!("{name}.jsonl")), &meta)?;
            graph.add_trajectory(&t, &settings, meta.seed)?;
        }
    }
    if graph.trajectories().is_empty() {
        return Err(Error::Config(format!("no trajectory logs under {}", input.display())));
    }
    apply_labels(&mut graph);
    let mut component = graph.largest_weakly_connected_component()?;
    apply_labels(&mut component);
    create_dir(out)?;
    graph.save(&out.join("graph.json"))?;
    component.save(&out.join("graph_lwcc.json"))?;
    finish(out, "graph", None, &["graph.json", "graph_lwcc.json"])?;
    Ok(GraphReport {
        trajectories: graph.trajectories().len(),
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        component_nodes: component.node_count(),
    })
}

/// Subgraph samples of a campaign, in run order.
pub fn load_subgraphs(input: &Path) -> Result<Vec<CollectiveGraph>> {
    let mut out = Vec::new();
    for cell in cell_dirs(input)? {
        for path in sorted_entries(&cell.join("subgraphs"), ".json")? {
            out.push(CollectiveGraph::load(&path)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub positives: usize,
    pub negatives: usize,
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub samples: usize,
    pub report: TrainReport,
    pub holdout: HoldoutReport,
}

/// Trains an encoder on subgraph samples with a held-out edge split per
/// sample, and scores the held-out pairs afterwards.
pub fn train_on_subgraphs(
    subgraphs: &[CollectiveGraph],
    config: &TrainConfig,
    model_seed: u64,
) -> Result<(EncoderModel, TrainOutcome)> {
    let mut rng = seeded(derive_seed(config.seed, &[1]));
    let mut samples = Vec::new();
    let mut held = Vec::new();
    for g in subgraphs {
        if g.node_count() < 2 {
            log::warn!("skipping a subgraph with {} node(s)", g.node_count());
            continue;
        }
        let (_, input) = GraphInput::from_graph(g)?;
        let (sample, h) = split_edges(&input, config.validation_fraction, &mut rng);
        samples.push(sample);
        held.push(h);
    }
    if samples.is_empty() {
        return Err(Error::Config("no subgraph samples".into()));
    }
    let mut model = EncoderModel::new(model_seed);
    let report = train(&mut model, &samples, config)?;
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for (s, h) in samples.iter().zip(&held) {
        let (p, n) = holdout_scores(&model, s, h)?;
        pos.extend(p);
        neg.extend(n);
    }
    let holdout = HoldoutReport { positives: pos.len(), negatives: neg.len(), auc: roc_auc(&pos, &neg) };
    Ok((model, TrainOutcome { samples: samples.len(), report, holdout }))
}

#[derive(Serialize)]
struct LossRow {
    epoch: usize,
    loss: f64,
}

pub fn train_models(input: &Path, out: &Path, config: &TrainConfig, model_seed: u64) -> Result<TrainOutcome> {
    let subgraphs = load_subgraphs(input)?;
    let (model, outcome) = train_on_subgraphs(&subgraphs, config, model_seed)?;
    create_dir(out)?;
    model.save(&out.join("model.json"))?;
    let mut rows = vec![LossRow { epoch: 0, loss: outcome.report.initial_loss }];
    rows.extend(outcome.report.history.iter().enumerate().map(|(i, &loss)| LossRow { epoch: i + 1, loss }));
    write_csv(&out.join("loss_history.csv"), &rows)?;
    write_json(&out.join("holdout.json"), &outcome.holdout)?;
    finish(out, "train", Some(config.seed), &["model.json", "loss_history.csv", "holdout.json"])?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRow {
    pub key: String,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub label: Option<NodeLabel>,
    pub visit_count: u64,
}

pub fn embedding_rows(model: &EncoderModel, graph: &CollectiveGraph) -> Result<Vec<EmbeddingRow>> {
    let labels = label_nodes(graph);
    Ok(embed_graph(model, graph)?
        .into_iter()
        .map(|(key, [e1, e2, e3])| EmbeddingRow {
            label: labels.get(&key).copied(),
            visit_count: graph.node(&key).map_or(0, |n| n.visit_count),
            key,
            e1,
            e2,
            e3,
        })
        .collect())
}

pub fn embed(graph_path: &Path, model_path: &Path, out: &Path) -> Result<usize> {
    let graph = CollectiveGraph::load(graph_path)?;
    let model = EncoderModel::load(model_path)?;
    let rows = embedding_rows(&model, &graph)?;
    create_dir(out)?;
    write_csv(&out.join("embeddings.csv"), &rows)?;
    finish(out, "embed", Some(model.init_seed), &["embeddings.csv"])?;
    Ok(rows.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub tsne: TsneConfig,
    pub clusters: usize,
    pub restarts: usize,
    /// Larger graphs skip the quadratic t-SNE step.
    pub max_tsne_nodes: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { tsne: TsneConfig::default(), clusters: 4, restarts: 10, max_tsne_nodes: 3000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuccessRow {
    pub key: String,
    pub on_success: u64,
    pub on_any: u64,
    pub probability: f64,
    pub reliable: bool,
    pub label: NodeLabel,
    pub visit_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRow {
    pub key: String,
    pub x: f64,
    pub y: f64,
    pub cluster: usize,
    pub label: NodeLabel,
    pub visit_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCsvRow {
    pub bin_low: f64,
    pub bin_high: f64,
    pub distance: f64,
    pub runs: usize,
    pub success_mean: Option<f64>,
    pub success_p25: Option<f64>,
    pub success_p75: Option<f64>,
    pub success_count: usize,
    pub ticks_mean: Option<f64>,
    pub ticks_p25: Option<f64>,
    pub ticks_p75: Option<f64>,
    pub ticks_count: usize,
}

impl From<&AggregateRow> for AggregateCsvRow {
    fn from(r: &AggregateRow) -> Self {
        let s = r.success;
        let t = r.ticks;
        AggregateCsvRow {
            bin_low: r.bin_low,
            bin_high: r.bin_high,
            distance: r.distance,
            runs: r.runs,
            success_mean: s.map(|v| v.mean),
            success_p25: s.map(|v| v.p25),
            success_p75: s.map(|v| v.p75),
            success_count: s.map_or(0, |v| v.count),
            ticks_mean: t.map(|v| v.mean),
            ticks_p25: t.map(|v| v.p25),
            ticks_p75: t.map(|v| v.p75),
            ticks_count: t.map_or(0, |v| v.count),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub nodes: usize,
    pub reliable_nodes: usize,
    pub clustered: bool,
}

/// 2D t-SNE layout of the node tensors with k-means clusters, if the graph
/// fits the configured limits.
pub fn cluster_rows(graph: &CollectiveGraph, config: &AnalysisConfig) -> Result<Option<Vec<ClusterRow>>> {
    let n = graph.node_count();
    if n > config.max_tsne_nodes || n < 3 || config.tsne.perplexity >= (n - 1) as f64 / 3.0 {
        log::warn!("skipping t-SNE for {n} nodes at perplexity {}", config.tsne.perplexity);
        return Ok(None);
    }
    let keys = graph.node_order();
    let tensors: Vec<&[f64]> = keys.iter().map(|k| graph.nodes()[k].tensor.values.as_slice()).collect();
    if tensors.iter().any(|t| t.len() != tensors[0].len()) {
        log::warn!("skipping t-SNE: node tensors differ in length");
        return Ok(None);
    }
    let layout = tsne_2d(&tensors, &config.tsne)?;
    let k = config.clusters.min(n);
    let clusters = kmeans(&layout, k, config.tsne.seed, config.restarts)?;
    let labels = label_nodes(graph);
    Ok(Some(
        keys.into_iter()
            .zip(layout)
            .zip(clusters.labels)
            .map(|((key, [x, y]), cluster)| ClusterRow {
                label: labels[&key],
                visit_count: graph.nodes()[&key].visit_count,
                key,
                x,
                y,
                cluster,
            })
            .collect(),
    ))
}

pub fn analyze(input: &Path, out: &Path, config: &AnalysisConfig) -> Result<AnalysisReport> {
    let graph = CollectiveGraph::load(&input.join("graph.json"))?;
    let labels = label_nodes(&graph);
    let stats = success_probability(&graph);
    let rows: Vec<SuccessRow> = stats
        .iter()
        .map(|(k, s)| SuccessRow {
            key: k.clone(),
            on_success: s.on_success,
            on_any: s.on_any,
            probability: s.probability,
            reliable: s.reliable,
            label: labels[k],
            visit_count: graph.nodes()[k].visit_count,
        })
        .collect();
    create_dir(out)?;
    write_csv(&out.join("success_probability.csv"), &rows)?;
    let mut files = vec!["success_probability.csv"];

    let metrics_path = input.join("metrics.csv");
    if metrics_path.exists() {
        let runs = MetricsRow::read_all(&metrics_path)?
            .iter()
            .map(MetricsRow::metrics)
            .collect::<Result<Vec<_>>>()?;
        let agg: Vec<AggregateCsvRow> = aggregate_metrics(&runs).iter().map(AggregateCsvRow::from).collect();
        write_csv(&out.join("aggregate.csv"), &agg)?;
        files.push("aggregate.csv");
    }
    let clusters = cluster_rows(&graph, config)?;
    if let Some(c) = &clusters {
        write_csv(&out.join("clusters_2d.csv"), c)?;
        files.push("clusters_2d.csv");
    }
    finish(out, "analyze", Some(config.tsne.seed), &files)?;
    Ok(AnalysisReport {
        nodes: graph.node_count(),
        reliable_nodes: rows.iter().filter(|r| r.reliable).count(),
        clustered: clusters.is_some(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrendRow {
    quality_difference: f64,
    bin_low: f64,
    bin_high: f64,
    distance: f64,
    mean: f64,
    p25: f64,
    p75: f64,
    count: usize,
}

fn trend(rows: &[AggregateRow], pick: impl Fn(&AggregateRow) -> Option<Spread>) -> Vec<TrendRow> {
    rows.iter()
        .filter_map(|r| {
            pick(r).map(|s| TrendRow {
                quality_difference: (r.bin_low + r.bin_high) / 2.0,
                bin_low: r.bin_low,
                bin_high: r.bin_high,
                distance: r.distance,
                mean: s.mean,
                p25: s.p25,
                p75: s.p75,
                count: s.count,
            })
        })
        .collect()
}

/// Plot-ready tables: success and time against quality difference per
/// distance, plus copies of the 2D cluster layout and the 3D embedding when
/// given.
pub fn export(input: &Path, analysis: Option<&Path>, embeddings: Option<&Path>, out: &Path) -> Result<Vec<String>> {
    let runs = MetricsRow::read_all(&input.join("metrics.csv"))?
        .iter()
        .map(MetricsRow::metrics)
        .collect::<Result<Vec<_>>>()?;
    let agg = aggregate_metrics(&runs);
    create_dir(out)?;
    let mut files = vec!["success_vs_quality_difference.csv".to_string(), "time_vs_quality_difference.csv".to_string()];
    write_csv(&out.join(&files[0]), &trend(&agg, |r| r.success))?;
    write_csv(&out.join(&files[1]), &trend(&agg, |r| r.ticks))?;
    let mut copy = |src: PathBuf, name: &str| -> Result<()> {
        if !src.exists() {
            return Err(Error::Config(format!("{} does not exist", src.display())));
        }
        let dst = out.join(name);
        fs::copy(&src, &dst).map_err(|e| Error::io(&dst, e))?;
        files.push(name.to_string());
        Ok(())
    };
    if let Some(dir) = analysis {
        copy(dir.join("clusters_2d.csv"), "clusters_2d.csv")?;
    }
    if let Some(path) = embeddings {
        copy(path.to_path_buf(), "embedding_3d.csv")?;
    }
    let names: Vec<&str> = files.iter().map(String::as_str).collect();
    finish(out, "export", None, &names)?;
    Ok(files)
}
