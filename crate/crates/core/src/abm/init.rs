use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::TransitionParams;
use super::types::{Agent, AgentState, Point, Site, WorldConfig};
use crate::{Error, Result};

/// Seed configurations for a colony.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    AllObserve,
    HalfExploreHalfObserve,
    NinetyObserveTenRecruitWorst,
    /// Every agent in a uniformly drawn state, placed where that state makes
    /// sense.
    Random,
}

impl InitialCondition {
    /// The three configurations the sweep pools its starting states from.
    pub const SEEDS: [InitialCondition; 3] = [
        InitialCondition::AllObserve,
        InitialCondition::HalfExploreHalfObserve,
        InitialCondition::NinetyObserveTenRecruitWorst,
    ];
}

pub fn make_initial_condition<R: Rng + ?Sized>(
    kind: InitialCondition,
    world: &WorldConfig,
    params: &TransitionParams,
    rng: &mut R,
) -> Result<Vec<Agent>> {
    let k = world.num_agents;
    let hub = world.hub;
    let mut colony: Vec<Agent> = (0..k).map(|id| Agent::observer(id, hub)).collect();
    match kind {
        InitialCondition::AllObserve => {}
        InitialCondition::HalfExploreHalfObserve => {
            for agent in colony.iter_mut().take(k / 2) {
                agent.state = AgentState::Explore;
                agent.position = random_in_disk(world, rng);
                agent.heading = rng.random_range(0.0..TAU);
            }
        }
        InitialCondition::NinetyObserveTenRecruitWorst => {
            let worst = world
                .sites
                .iter()
                .min_by(|a, b| a.quality.total_cmp(&b.quality))
                .ok_or_else(|| Error::Config("recruiting start needs at least one site".into()))?;
            let recruiters = (0.1 * k as f64).round() as usize;
            for agent in colony.iter_mut().take(recruiters) {
                agent.state = AgentState::Recruit;
                agent.favored_site = Some(worst.id);
                agent.reassess_remaining = params.reassess_budget(worst.quality)?;
            }
        }
        InitialCondition::Random => {
            for agent in colony.iter_mut() {
                randomize(agent, world, params, rng)?;
            }
        }
    }
    Ok(colony)
}

fn random_in_disk<R: Rng + ?Sized>(world: &WorldConfig, rng: &mut R) -> Point {
    let r = world.max_distance * rng.random::<f64>().sqrt();
    let p = Point::from_polar(r, rng.random_range(0.0..TAU));
    Point::new(world.hub.x + p.x, world.hub.y + p.y)
}

fn lerp(a: Point, b: Point, t: f64) -> Point {
    Point::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
}

fn randomize<R: Rng + ?Sized>(
    agent: &mut Agent,
    world: &WorldConfig,
    params: &TransitionParams,
    rng: &mut R,
) -> Result<()> {
    let state = AgentState::ALL[rng.random_range(0..AgentState::ALL.len())];
    if state.is_site_oriented() && world.sites.is_empty() {
        return Ok(());
    }
    agent.state = state;
    let hub = world.hub;
    if state.is_site_oriented() {
        let site = &world.sites[rng.random_range(0..world.sites.len())];
        agent.favored_site = Some(site.id);
        agent.reassess_remaining = params.reassess_budget(site.quality)?;
        match state {
            AgentState::Assess => agent.position = site.position,
            AgentState::Recruit => agent.position = hub,
            AgentState::TravelSite => {
                agent.position = lerp(hub, site.position, rng.random::<f64>());
                agent.target = Some(site.position);
            }
            AgentState::TravelHubRecruit => {
                agent.position = lerp(site.position, hub, rng.random::<f64>());
                agent.target = Some(hub);
            }
            _ => unreachable!(),
        }
    } else {
        match state {
            AgentState::Explore => {
                agent.position = random_in_disk(world, rng);
                agent.heading = rng.random_range(0.0..TAU);
            }
            AgentState::TravelHubObserve => {
                agent.position = random_in_disk(world, rng);
                agent.target = Some(hub);
            }
            _ => {}
        }
    }
    Ok(())
}

/// Places one site per quality at `distance` from the hub, evenly spaced in
/// angle under a random global rotation.
pub fn place_sites<R: Rng + ?Sized>(qualities: &[f64], distance: f64, rng: &mut R) -> Vec<Site> {
    let rotation = rng.random_range(0.0..TAU);
    let n = qualities.len().max(1) as f64;
    qualities
        .iter()
        .enumerate()
        .map(|(id, &quality)| Site {
            id,
            position: Point::from_polar(distance, rotation + TAU * id as f64 / n),
            quality,
        })
        .collect()
}

/// Draws `n` qualities uniformly from `(min_quality, 1]`, rejecting vectors
/// where any pair differs by `max_difference` or more.
pub fn sample_qualities<R: Rng + ?Sized>(
    n: usize,
    min_quality: f64,
    max_difference: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&min_quality) || !(max_difference > 0.0) {
        return Err(Error::Config("quality constraints leave no feasible value".into()));
    }
    for _ in 0..100_000 {
        let qs: Vec<f64> = (0..n)
            .map(|_| 1.0 - rng.random::<f64>() * (1.0 - min_quality))
            .collect();
        let lo = qs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = qs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo > min_quality && hi - lo < max_difference {
            return Ok(qs);
        }
    }
    Err(Error::Config("could not sample qualities satisfying the constraints".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn world(k: usize, qualities: &[f64]) -> WorldConfig {
        let sites = place_sites(qualities, 150.0, &mut seeded(0));
        WorldConfig::new(1000.0, sites, k, 0.5, 100, 0)
    }

    fn count(colony: &[Agent], s: AgentState) -> usize {
        colony.iter().filter(|a| a.state == s).count()
    }

    #[test]
    fn all_observe() {
        let w = world(5, &[0.9, 0.6]);
        let c = make_initial_condition(InitialCondition::AllObserve, &w, &TransitionParams::table2(), &mut seeded(1)).unwrap();
        assert_eq!(count(&c, AgentState::Observe), 5);
        assert!(c.iter().all(|a| a.position == w.hub));
    }

    #[test]
    fn half_explore() {
        let w = world(10, &[0.9, 0.6]);
        let c = make_initial_condition(InitialCondition::HalfExploreHalfObserve, &w, &TransitionParams::table2(), &mut seeded(2)).unwrap();
        assert_eq!(count(&c, AgentState::Explore), 5);
        assert_eq!(count(&c, AgentState::Observe), 5);
        for a in &c {
            a.validate(&w).unwrap();
        }
    }

    #[test]
    fn ten_percent_recruit_worst() {
        let w = world(10, &[0.9, 0.6]);
        let c = make_initial_condition(InitialCondition::NinetyObserveTenRecruitWorst, &w, &TransitionParams::table2(), &mut seeded(3)).unwrap();
        assert_eq!(count(&c, AgentState::Observe), 9);
        let r: Vec<_> = c.iter().filter(|a| a.state == AgentState::Recruit).collect();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].favored_site, Some(1));
        assert_eq!(r[0].position, w.hub);

        let empty = WorldConfig::new(1000.0, vec![], 10, 0.5, 100, 0);
        assert!(make_initial_condition(InitialCondition::NinetyObserveTenRecruitWorst, &empty, &TransitionParams::table2(), &mut seeded(3)).is_err());
    }

    #[test]
    fn random_states_are_valid() {
        let w = world(10, &[1.0, 0.5]);
        let mut rng = seeded(4);
        for _ in 0..200 {
            let c = make_initial_condition(InitialCondition::Random, &w, &TransitionParams::table2(), &mut rng).unwrap();
            for a in &c {
                a.validate(&w).unwrap();
            }
        }
    }

    #[test]
    fn sites_sit_at_distance() {
        let sites = place_sites(&[0.9, 0.8, 0.7], 200.0, &mut seeded(5));
        for s in &sites {
            assert!((s.position.norm() - 200.0).abs() < 1e-9);
        }
        let gap = sites[0].position.distance(sites[1].position);
        assert!((gap - sites[1].position.distance(sites[2].position)).abs() < 1e-9);
    }

    #[test]
    fn qualities_respect_constraints() {
        let mut rng = seeded(6);
        for n in 2..=4 {
            for _ in 0..100 {
                let q = sample_qualities(n, 0.5, 0.5, &mut rng).unwrap();
                assert!(q.iter().all(|&x| x > 0.5 && x <= 1.0));
            }
        }
    }
}
