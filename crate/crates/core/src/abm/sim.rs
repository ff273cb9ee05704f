use serde::{Deserialize, Serialize};

use super::params::TransitionParams;
use super::step::{step_with_pool, RecruiterPool};
use super::types::{Agent, AgentState, Site, WorldConfig};
use crate::rng::{seeded, SimRng};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "site", rename_all = "snake_case")]
pub enum Outcome {
    Decided(usize),
    TimedOut,
}

impl Outcome {
    pub fn chosen(self) -> Option<usize> {
        match self {
            Outcome::Decided(s) => Some(s),
            Outcome::TimedOut => None,
        }
    }
}

/// Every collective snapshot of one trial, tick 0 included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub condition_id: usize,
    pub seed: u64,
    pub sites: Vec<Site>,
    pub max_distance: f64,
    pub snapshots: Vec<Vec<Agent>>,
    pub outcome: Outcome,
    pub ticks_elapsed: u64,
}

/// Outcome of a trial without the snapshots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub outcome: Outcome,
    pub ticks_elapsed: u64,
}

/// Smallest recruiter count strictly above `tau * K`.
pub fn quorum_threshold(world: &WorldConfig) -> usize {
    (world.quorum_fraction * world.num_agents as f64).floor() as usize + 1
}

/// Site with a quorum of recruiters at the hub, if any. Should two sites both
/// reach the threshold (only possible for `tau < 0.5`) the larger count wins,
/// then the lower site id.
pub fn check_quorum(snapshot: &[Agent], world: &WorldConfig) -> Option<usize> {
    let need = quorum_threshold(world);
    RecruiterPool::at_hub(snapshot, world)
        .by_site
        .into_iter()
        .filter(|&(_, c)| c >= need)
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(s, _)| s)
}

/// A running trial. Agents are updated synchronously: every agent steps from
/// the same tick-t snapshot.
pub struct Simulation {
    world: WorldConfig,
    params: TransitionParams,
    agents: Vec<Agent>,
    rng: SimRng,
    tick: u64,
}

impl Simulation {
    pub fn new(
        world: &WorldConfig,
        params: &TransitionParams,
        initial: &[Agent],
        seed: u64,
    ) -> Result<Self> {
        world.validate()?;
        params.validate()?;
        validate_colony(initial, world)?;
        Ok(Simulation {
            world: world.clone(),
            params: params.clone(),
            agents: initial.to_vec(),
            rng: seeded(seed),
            tick: 0,
        })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn world(&self) -> &WorldConfig {
        &self.world
    }

    /// True once a quorum has formed or the tick budget is spent.
    pub fn finished(&self) -> bool {
        self.quorum().is_some() || self.tick >= self.world.max_ticks
    }

    pub fn quorum(&self) -> Option<usize> {
        check_quorum(&self.agents, &self.world)
    }

    pub fn step(&mut self) -> Result<()> {
        let pool = RecruiterPool::at_hub(&self.agents, &self.world);
        let next = self
            .agents
            .iter()
            .map(|a| step_with_pool(a, &pool, &self.world, &self.params, &mut self.rng))
            .collect::<Result<Vec<_>>>()?;
        self.agents = next;
        self.tick += 1;
        Ok(())
    }

    /// Runs to quorum or `max_ticks`, calling `observe` on tick 0 and after
    /// every step.
    pub fn run_with<F>(mut self, mut observe: F) -> Result<RunSummary>
    where
        F: FnMut(u64, &[Agent], Option<usize>),
    {
        let mut quorum = self.quorum();
        observe(0, &self.agents, quorum);
        while quorum.is_none() && self.tick < self.world.max_ticks {
            self.step()?;
            quorum = self.quorum();
            observe(self.tick, &self.agents, quorum);
        }
        let outcome = quorum.map_or(Outcome::TimedOut, Outcome::Decided);
        Ok(RunSummary { outcome, ticks_elapsed: self.tick })
    }
}

fn validate_colony(colony: &[Agent], world: &WorldConfig) -> Result<()> {
    if colony.len() != world.num_agents {
        return Err(Error::Invariant(format!(
            "initial colony has {} agents, world expects {}",
            colony.len(),
            world.num_agents
        )));
    }
    let mut ids: Vec<usize> = colony.iter().map(|a| a.id).collect();
    ids.sort_unstable();
    if ids.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Invariant("agent ids are not distinct".into()));
    }
    colony.iter().try_for_each(|a| a.validate(world))
}

/// Runs one trial and keeps every snapshot.
pub fn run_simulation(
    world: &WorldConfig,
    params: &TransitionParams,
    initial: &[Agent],
    seed: u64,
) -> Result<Trajectory> {
    let mut snapshots = Vec::new();
    let summary = Simulation::new(world, params, initial, seed)?
        .run_with(|_, agents, _| snapshots.push(agents.to_vec()))?;
    Ok(Trajectory {
        condition_id: 0,
        seed,
        sites: world.sites.clone(),
        max_distance: world.max_distance,
        snapshots,
        outcome: summary.outcome,
        ticks_elapsed: summary.ticks_elapsed,
    })
}

/// Runs one trial keeping only the outcome.
pub fn run_outcome(
    world: &WorldConfig,
    params: &TransitionParams,
    initial: &[Agent],
    seed: u64,
) -> Result<RunSummary> {
    Simulation::new(world, params, initial, seed)?.run_with(|_, _, _| {})
}

impl Trajectory {
    pub fn with_condition(mut self, condition_id: usize) -> Self {
        self.condition_id = condition_id;
        self
    }

    pub fn final_snapshot(&self) -> Option<&[Agent]> {
        self.snapshots.last().map(Vec::as_slice)
    }

    pub fn chosen_quality(&self) -> Option<f64> {
        let s = self.outcome.chosen()?;
        self.sites.iter().find(|x| x.id == s).map(|x| x.quality)
    }

    pub fn best_site(&self) -> Option<usize> {
        super::types::best_site(&self.sites)
    }

    /// Counts agents per state over the final snapshot.
    pub fn final_state_counts(&self) -> [usize; 7] {
        let mut counts = [0; 7];
        if let Some(last) = self.final_snapshot() {
            for a in last {
                let i = AgentState::ALL.iter().position(|&s| s == a.state).unwrap();
                counts[i] += 1;
            }
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abm::{Point, Site};

    fn world(k: usize) -> WorldConfig {
        WorldConfig::new(
            1000.0,
            vec![
                Site { id: 0, position: Point::new(100.0, 0.0), quality: 0.9 },
                Site { id: 1, position: Point::new(-100.0, 0.0), quality: 0.6 },
            ],
            k,
            0.5,
            200,
            0,
        )
    }

    fn recruiter(id: usize, site: usize, at: Point) -> Agent {
        Agent {
            id,
            state: AgentState::Recruit,
            position: at,
            heading: 0.0,
            favored_site: Some(site),
            reassess_remaining: 1,
            target: None,
        }
    }

    #[test]
    fn thresholds() {
        assert_eq!(quorum_threshold(&world(10)), 6);
        assert_eq!(quorum_threshold(&world(5)), 3);
    }

    #[test]
    fn quorum_examples() {
        let w = world(10);
        let mut colony: Vec<Agent> = (0..6).map(|i| recruiter(i, 0, w.hub)).collect();
        colony.extend((6..10).map(|i| Agent::observer(i, w.hub)));
        assert_eq!(check_quorum(&colony, &w), Some(0));

        let w5 = world(5);
        let mut small: Vec<Agent> = (0..2).map(|i| recruiter(i, 0, w5.hub)).collect();
        small.extend((2..5).map(|i| Agent::observer(i, w5.hub)));
        assert_eq!(check_quorum(&small, &w5), None);

        let away = w.sites[0].position;
        let mut field: Vec<Agent> = (0..6).map(|i| recruiter(i, 0, away)).collect();
        field.extend((6..10).map(|i| Agent::observer(i, w.hub)));
        assert_eq!(check_quorum(&field, &w), None);
    }

    #[test]
    fn immediate_quorum_stops_at_tick_zero() {
        let w = world(10);
        let mut colony: Vec<Agent> = (0..6).map(|i| recruiter(i, 1, w.hub)).collect();
        colony.extend((6..10).map(|i| Agent::observer(i, w.hub)));
        let t = run_simulation(&w, &TransitionParams::table2(), &colony, 1).unwrap();
        assert_eq!(t.ticks_elapsed, 0);
        assert_eq!(t.outcome, Outcome::Decided(1));
        assert_eq!(t.snapshots.len(), 1);
    }

    #[test]
    fn absorbing_observers_time_out() {
        let w = world(5);
        let params = TransitionParams { p1: 0.0, p3: 0.0, ..TransitionParams::table2() };
        let colony: Vec<Agent> = (0..5).map(|i| Agent::observer(i, w.hub)).collect();
        let t = run_simulation(&w, &params, &colony, 9).unwrap();
        assert_eq!(t.outcome, Outcome::TimedOut);
        assert_eq!(t.ticks_elapsed, w.max_ticks);
        assert_eq!(t.snapshots.len() as u64, w.max_ticks + 1);
        assert!(t.final_snapshot().unwrap().iter().all(|a| a.state == AgentState::Observe));
    }

    #[test]
    fn wrong_colony_size_is_rejected() {
        let w = world(5);
        let colony: Vec<Agent> = (0..4).map(|i| Agent::observer(i, w.hub)).collect();
        assert!(run_simulation(&w, &TransitionParams::table2(), &colony, 0).is_err());
        let dup: Vec<Agent> = (0..5).map(|_| Agent::observer(0, w.hub)).collect();
        assert!(run_simulation(&w, &TransitionParams::table2(), &dup, 0).is_err());
    }
}
