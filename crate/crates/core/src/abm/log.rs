//! JSON-lines trajectory logs: one object per tick, plus a small JSON sidecar
//! carrying the trial's sites and outcome.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sim::{Outcome, Trajectory};
use super::types::{Agent, AgentState, Point, Site};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub id: usize,
    pub state: AgentState,
    pub x: f64,
    pub y: f64,
    pub site: Option<usize>,
    pub reassess: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub agents: Vec<AgentRecord>,
    pub quorum: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMeta {
    pub format_version: u32,
    pub condition_id: usize,
    pub seed: u64,
    pub sites: Vec<Site>,
    pub max_distance: f64,
    pub outcome: Outcome,
    pub ticks_elapsed: u64,
}

impl TrialMeta {
    pub const FORMAT_VERSION: u32 = 1;

    pub fn of(t: &Trajectory) -> Self {
        TrialMeta {
            format_version: Self::FORMAT_VERSION,
            condition_id: t.condition_id,
            seed: t.seed,
            sites: t.sites.clone(),
            max_distance: t.max_distance,
            outcome: t.outcome,
            ticks_elapsed: t.ticks_elapsed,
        }
    }
}

/// Writes `t` as JSON lines. The quorum field is only set on the deciding
/// tick, since a trial stops as soon as a quorum forms.
pub fn write_trajectory_log(path: &Path, t: &Trajectory) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let last = t.snapshots.len().saturating_sub(1);
    for (i, snap) in t.snapshots.iter().enumerate() {
        let rec = TickRecord {
            tick: i as u64,
            agents: snap
                .iter()
                .map(|a| AgentRecord {
                    id: a.id,
                    state: a.state,
                    x: a.position.x,
                    y: a.position.y,
                    site: a.favored_site,
                    reassess: a.reassess_remaining,
                })
                .collect(),
            quorum: if i == last { t.outcome.chosen() } else { None },
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads a log back. Headings are not logged and come back as zero; travel
/// targets are rebuilt from the state and favored site.
pub fn read_trajectory_log(path: &Path, meta: &TrialMeta) -> Result<Trajectory> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let hub = Point::ORIGIN;
    let mut snapshots = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TickRecord = serde_json::from_str(&line)?;
        let snap = rec
            .agents
            .into_iter()
            .map(|r| {
                let target = match r.state {
                    AgentState::TravelSite => r
                        .site
                        .and_then(|s| meta.sites.iter().find(|x| x.id == s))
                        .map(|s| s.position),
                    AgentState::TravelHubObserve | AgentState::TravelHubRecruit => Some(hub),
                    _ => None,
                };
                Agent {
                    id: r.id,
                    state: r.state,
                    position: Point::new(r.x, r.y),
                    heading: 0.0,
                    favored_site: r.site,
                    reassess_remaining: r.reassess,
                    target,
                }
            })
            .collect();
        snapshots.push(snap);
    }
    Ok(Trajectory {
        condition_id: meta.condition_id,
        seed: meta.seed,
        sites: meta.sites.clone(),
        max_distance: meta.max_distance,
        snapshots,
        outcome: meta.outcome,
        ticks_elapsed: meta.ticks_elapsed,
    })
}
