use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Campaign, Cell, TAG_POOL, TAG_TRIAL, TAG_WORLD};
use super::manifest::{sha256_file, FileEntry, Manifest};
use crate::abm::{
    check_quorum, make_initial_condition, place_sites, run_simulation, write_trajectory_log, Agent,
    InitialCondition, TransitionParams, TrialMeta, WorldConfig,
};
use crate::analysis::{apply_labels, RunMetrics};
use crate::codec::{tensor_key, CodecSettings, Encoding, DEFAULT_MAX_AGENTS};
use crate::graph::{subgraph_sample, CollectiveGraph};
use crate::rng::{derive_seed, seeded};
use crate::{Error, Result};

/// Seed of one trial, a pure function of the base seed and the trial's grid
/// coordinates.
pub fn trial_seed(base: u64, cell: &Cell, condition: usize, repetition: usize) -> u64 {
    derive_seed(
        base,
        &[
            TAG_TRIAL,
            cell.runtime,
            cell.distance.to_bits(),
            cell.agents as u64,
            cell.sites() as u64,
            cell.quality_index as u64,
            condition as u64,
            repetition as u64,
        ],
    )
}

fn world_seed(base: u64, cell: &Cell) -> u64 {
    derive_seed(
        base,
        &[TAG_WORLD, cell.distance.to_bits(), cell.agents as u64, cell.sites() as u64, cell.quality_index as u64],
    )
}

/// Starting states for a sweep: one run per seed configuration, every
/// distinct non-quorum snapshot pooled, then `pool_size` drawn without
/// replacement.
pub fn build_initial_pool<R: Rng + ?Sized>(
    world: &WorldConfig,
    params: &TransitionParams,
    pool_size: usize,
    pool_ticks: u64,
    rng: &mut R,
) -> Result<Vec<Vec<Agent>>> {
    let settings = CodecSettings { encoding: Encoding::Float, max_agents: world.num_agents.max(DEFAULT_MAX_AGENTS) };
    let short = WorldConfig { max_ticks: pool_ticks, ..world.clone() };
    let mut seen = HashSet::new();
    let mut distinct = Vec::new();
    for kind in InitialCondition::SEEDS {
        let start = make_initial_condition(kind, &short, params, rng)?;
        let t = run_simulation(&short, params, &start, rng.random())?;
        for snap in t.snapshots {
            if check_quorum(&snap, world).is_some() {
                continue;
            }
            let key = tensor_key(&settings.encode(&snap, &world.sites, world.max_distance)?)?;
            if seen.insert(key) {
                distinct.push(snap);
            }
        }
    }
    if distinct.len() < pool_size {
        return Err(Error::Config(format!(
            "only {} distinct starting states in {pool_ticks} ticks, {pool_size} needed; use a longer pool runtime",
            distinct.len()
        )));
    }
    let picks = sample(rng, distinct.len(), pool_size);
    Ok(picks.into_iter().map(|i| distinct[i].clone()).collect())
}

/// Flat row of the metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub simulation: u64,
    pub cell: String,
    pub condition_id: usize,
    pub runtime: u64,
    pub distance: f64,
    pub agents: usize,
    pub sites: usize,
    /// `;`-separated site qualities in site-id order.
    pub qualities: String,
    pub quality_difference: f64,
    pub chosen: Option<usize>,
    pub success: Option<f64>,
    pub ticks: Option<u64>,
}

impl MetricsRow {
    fn new(cell: &Cell, m: &RunMetrics) -> Self {
        MetricsRow {
            simulation: m.simulation,
            cell: cell.id.clone(),
            condition_id: m.condition_id,
            runtime: m.runtime,
            distance: m.distance,
            agents: cell.agents,
            sites: m.qualities.len(),
            qualities: m.qualities.iter().map(|q| q.to_string()).collect::<Vec<_>>().join(";"),
            quality_difference: m.quality_difference(),
            chosen: m.chosen,
            success: m.success,
            ticks: m.ticks,
        }
    }

    pub fn metrics(&self) -> Result<RunMetrics> {
        let qualities = self
            .qualities
            .split(';')
            .map(|q| q.parse::<f64>().map_err(|e| Error::Analysis(format!("bad quality {q:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(RunMetrics {
            simulation: self.simulation,
            condition_id: self.condition_id,
            runtime: self.runtime,
            distance: self.distance,
            qualities,
            chosen: self.chosen,
            success: self.success,
            ticks: self.ticks,
        })
    }

    pub fn write_all(path: &Path, rows: &[MetricsRow]) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_all(path: &Path) -> Result<Vec<MetricsRow>> {
        let mut r = csv::Reader::from_path(path)?;
        Ok(r.deserialize().collect::<std::result::Result<Vec<MetricsRow>, _>>()?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub out: PathBuf,
    pub cells: usize,
    pub trials: usize,
    pub converged: usize,
    pub graph_nodes: usize,
    pub graph_edges: usize,
}

struct Trial {
    name: String,
    condition_id: usize,
    seed: u64,
    initial: Vec<Agent>,
}

struct TrialOutput {
    row: MetricsRow,
    subgraph: CollectiveGraph,
    files: Vec<FileEntry>,
}

fn plan_trials(
    campaign: &Campaign,
    cell: &Cell,
    world: &WorldConfig,
    params: &TransitionParams,
    pools: &mut HashMap<u64, Vec<Vec<Agent>>>,
) -> Result<Vec<Trial>> {
    let base = campaign.seed();
    match campaign {
        Campaign::Table2(c) => {
            let key = world_seed(base, cell);
            let pool = match pools.entry(key) {
                Entry::Occupied(e) => e.into_mut(),
                Entry::Vacant(e) => {
                    let mut rng = seeded(derive_seed(key, &[TAG_POOL]));
                    e.insert(build_initial_pool(world, params, c.pool_size, c.pool_ticks, &mut rng)?)
                }
            };
            let mut trials = Vec::new();
            for (ic, start) in pool.iter().enumerate() {
                for rep in 0..c.repetitions {
                    trials.push(Trial {
                        name: format!("ic{ic:02}_rep{rep:02}"),
                        condition_id: ic,
                        seed: trial_seed(base, cell, ic, rep),
                        initial: start.clone(),
                    });
                }
            }
            Ok(trials)
        }
        Campaign::Experiment1(c) => (0..c.trials)
            .map(|i| {
                let seed = trial_seed(base, cell, 0, i);
                let mut rng = seeded(derive_seed(seed, &[TAG_POOL]));
                let initial = make_initial_condition(InitialCondition::Random, world, params, &mut rng)?;
                Ok(Trial { name: format!("trial{i:04}"), condition_id: 0, seed, initial })
            })
            .collect(),
    }
}

fn rel(path: &Path, root: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    out: &Path,
    cell: &Cell,
    world: &WorldConfig,
    params: &TransitionParams,
    settings: &CodecSettings,
    write_logs: bool,
    trial: &Trial,
) -> Result<TrialOutput> {
    let world = WorldConfig { rng_seed: trial.seed, ..world.clone() };
    let t = run_simulation(&world, params, &trial.initial, trial.seed)?.with_condition(trial.condition_id);
    let cell_dir = out.join("cells").join(&cell.id);
    let mut files = Vec::new();
    let mut record = |p: PathBuf| -> Result<()> {
        files.push(FileEntry { path: rel(&p, out), sha256: sha256_file(&p)? });
        Ok(())
    };
    if write_logs {
        let log = cell_dir.join("trials").join(format!("{}.jsonl", trial.name));
        write_trajectory_log(&log, &t)?;
        record(log)?;
        let meta = cell_dir.join("trials").join(format!("{}.meta.json", trial.name));
        fs::write(&meta, serde_json::to_string_pretty(&TrialMeta::of(&t))?).map_err(|e| Error::io(&meta, e))?;
        record(meta)?;
    }
    let subgraph = subgraph_sample(std::slice::from_ref(&t), settings, trial.seed)?;
    let sub_path = cell_dir.join("subgraphs").join(format!("{}.json", trial.name));
    subgraph.save(&sub_path)?;
    record(sub_path)?;
    let m = RunMetrics::of(trial.seed, cell.runtime, cell.distance, &t)?;
    Ok(TrialOutput { row: MetricsRow::new(cell, &m), subgraph, files })
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Runs every trial of `campaign` into `out`: trajectory logs and subgraphs
/// per trial, then the merged labelled graph, the metrics table and the
/// manifest. Trials of a cell run on up to `workers` threads (0 = one per
/// core); results are merged in plan order so outputs do not depend on
/// scheduling.
pub fn run_campaign(campaign: &Campaign, out: &Path, workers: usize) -> Result<CampaignReport> {
    campaign.validate()?;
    create_dir(out)?;
    let params = campaign.params();
    let cells = campaign.cells()?;
    let encoding = campaign.encoding();
    let write_logs = match campaign {
        Campaign::Table2(c) => c.write_trajectories,
        Campaign::Experiment1(c) => c.write_trajectories,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let mut manifest = Manifest::new("simulate", Some(campaign.seed()));
    let config_path = out.join("campaign.json");
    fs::write(&config_path, serde_json::to_string_pretty(campaign)?).map_err(|e| Error::io(&config_path, e))?;
    manifest.add(out, "campaign.json")?;

    let mut graph = CollectiveGraph::new(encoding);
    let mut rows = Vec::new();
    let mut pools = HashMap::new();
    let result = (|| -> Result<()> {
        for cell in &cells {
            let agents_cap = cell.agents.max(DEFAULT_MAX_AGENTS);
            let settings = CodecSettings { encoding, max_agents: agents_cap };
            let mut rng = seeded(world_seed(campaign.seed(), cell));
            let sites = place_sites(&cell.qualities, cell.distance, &mut rng);
            let (max_distance, threshold) = match campaign {
                Campaign::Table2(c) => (c.maximum_distance, c.threshold),
                Campaign::Experiment1(c) => (c.maximum_distance, c.threshold),
            };
            let world = WorldConfig::new(max_distance, sites, cell.agents, threshold, cell.runtime, campaign.seed());
            world.validate()?;
            let trials = plan_trials(campaign, cell, &world, &params, &mut pools)?;
            let cell_dir = out.join("cells").join(&cell.id);
            create_dir(&cell_dir.join("subgraphs"))?;
            if write_logs {
                create_dir(&cell_dir.join("trials"))?;
            }
            let outputs: Vec<Result<TrialOutput>> = pool.install(|| {
                trials
                    .par_iter()
                    .map(|t| run_trial(out, cell, &world, &params, &settings, write_logs, t))
                    .collect()
            });
            for o in outputs {
                let o = o?;
                graph.merge(&o.subgraph)?;
                rows.push(o.row);
                manifest.files.extend(o.files);
            }
            manifest.completed_cells.push(cell.id.clone());
            log::info!("cell {} done ({} trials)", cell.id, trials.len());
        }
        apply_labels(&mut graph);
        graph.save(&out.join("graph.json"))?;
        manifest.add(out, "graph.json")?;
        MetricsRow::write_all(&out.join("metrics.csv"), &rows)?;
        manifest.add(out, "metrics.csv")?;
        Ok(())
    })();
    manifest.complete = result.is_ok();
    manifest.save(out)?;
    result?;
    Ok(CampaignReport {
        out: out.to_path_buf(),
        cells: cells.len(),
        trials: rows.len(),
        converged: rows.iter().filter(|r| r.chosen.is_some()).count(),
        graph_nodes: graph.node_count(),
        graph_edges: graph.edge_count(),
    })
}
