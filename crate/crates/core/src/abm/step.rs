use std::f64::consts::{PI, TAU};

use rand::Rng;

use super::params::TransitionParams;
use super::types::{Agent, AgentState, Point, WorldConfig};
use crate::Result;

/// Recruiters present at the hub during one tick, grouped by site.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RecruiterPool {
    /// `(site id, count)` in ascending site order, zero counts omitted.
    pub by_site: Vec<(usize, usize)>,
    pub total: usize,
}

impl RecruiterPool {
    pub fn from_counts(counts: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut by_site: Vec<(usize, usize)> = counts.into_iter().filter(|&(_, c)| c > 0).collect();
        by_site.sort_unstable();
        by_site.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        let total = by_site.iter().map(|&(_, c)| c).sum();
        RecruiterPool { by_site, total }
    }

    /// Recruiters in `R` that are within `site_radius` of the hub.
    pub fn at_hub(snapshot: &[Agent], world: &WorldConfig) -> Self {
        Self::from_counts(
            snapshot
                .iter()
                .filter(|a| {
                    a.state == AgentState::Recruit
                        && a.position.distance(world.hub) <= world.site_radius
                })
                .filter_map(|a| a.favored_site.map(|s| (s, 1))),
        )
    }

    /// One observer's recruitment draw: `binomial(|R|, rate)` pulls, recruited
    /// iff at least one pull fires, site chosen in proportion to recruiters.
    pub fn draw<R: Rng + ?Sized>(&self, rate: f64, rng: &mut R) -> Option<usize> {
        if self.total == 0 {
            return None;
        }
        let pulls = (0..self.total).filter(|_| rng.random_bool(rate)).count();
        if pulls == 0 {
            return None;
        }
        let mut pick = rng.random_range(0..self.total);
        for &(site, count) in &self.by_site {
            if pick < count {
                return Some(site);
            }
            pick -= count;
        }
        unreachable!("pick is below the pool total")
    }
}

/// Recruitment outcome for each of `observer_count` observers.
pub fn sample_recruitment<R: Rng + ?Sized>(
    observer_count: usize,
    recruiters: &RecruiterPool,
    rate: f64,
    rng: &mut R,
) -> Vec<Option<usize>> {
    (0..observer_count).map(|_| recruiters.draw(rate, rng)).collect()
}

/// Advances one agent by one tick, reading the rest of the colony from
/// `snapshot`.
pub fn step_agent<R: Rng + ?Sized>(
    agent: &Agent,
    snapshot: &[Agent],
    world: &WorldConfig,
    params: &TransitionParams,
    rng: &mut R,
) -> Result<Agent> {
    let pool = RecruiterPool::at_hub(snapshot, world);
    step_with_pool(agent, &pool, world, params, rng)
}

pub(crate) fn step_with_pool<R: Rng + ?Sized>(
    agent: &Agent,
    pool: &RecruiterPool,
    world: &WorldConfig,
    params: &TransitionParams,
    rng: &mut R,
) -> Result<Agent> {
    agent.validate(world)?;
    let mut next = agent.clone();
    match agent.state {
        AgentState::Observe => {
            if let Some(site) = pool.draw(params.recruit_pull_rate, rng) {
                commit_to(&mut next, site, world, params)?;
                travel_to_site(&mut next, world);
            } else if rng.random_bool(params.p1) {
                next.state = AgentState::Explore;
                next.heading = rng.random_range(0.0..TAU);
            }
        }
        AgentState::Explore => explore(&mut next, world, params, rng)?,
        AgentState::Assess => {
            if rng.random_bool(params.p4) {
                next.state = AgentState::TravelHubRecruit;
                next.target = Some(world.hub);
            }
        }
        AgentState::Recruit => {
            let q = favored_quality(agent, world)?;
            if !rng.random_bool(params.recruit_continue(q)?) {
                if next.reassess_remaining > 0 && rng.random_bool(params.p2) {
                    next.reassess_remaining -= 1;
                    travel_to_site(&mut next, world);
                } else {
                    abandon(&mut next);
                }
            }
        }
        AgentState::TravelHubObserve | AgentState::TravelHubRecruit | AgentState::TravelSite => {
            let target = agent.target.expect("validated travel target");
            if agent.position.distance(target) <= world.agent_speed {
                next.position = target;
                next.target = None;
                next.state = match agent.state {
                    AgentState::TravelSite => AgentState::Assess,
                    AgentState::TravelHubRecruit => AgentState::Recruit,
                    _ => AgentState::Observe,
                };
            } else {
                next.position = move_toward(agent.position, target, world.agent_speed);
            }
        }
    }
    Ok(next)
}

fn favored_quality(agent: &Agent, world: &WorldConfig) -> Result<f64> {
    let site = agent.favored_site.expect("validated favored site");
    Ok(world.quality(site).expect("validated site id"))
}

fn commit_to(agent: &mut Agent, site: usize, world: &WorldConfig, params: &TransitionParams) -> Result<()> {
    let q = world
        .quality(site)
        .ok_or_else(|| crate::Error::Invariant(format!("unknown site {site}")))?;
    agent.favored_site = Some(site);
    agent.reassess_remaining = params.reassess_budget(q)?;
    Ok(())
}

fn travel_to_site(agent: &mut Agent, world: &WorldConfig) {
    let site = agent.favored_site.and_then(|s| world.site(s)).expect("favored site exists");
    agent.state = AgentState::TravelSite;
    agent.target = Some(site.position);
}

fn abandon(agent: &mut Agent) {
    agent.state = AgentState::Observe;
    agent.favored_site = None;
    agent.reassess_remaining = 0;
    agent.target = None;
}

fn move_toward(from: Point, to: Point, speed: f64) -> Point {
    let d = from.distance(to);
    let f = speed / d;
    Point::new(from.x + (to.x - from.x) * f, from.y + (to.y - from.y) * f)
}

fn explore<R: Rng + ?Sized>(
    agent: &mut Agent,
    world: &WorldConfig,
    params: &TransitionParams,
    rng: &mut R,
) -> Result<()> {
    let noise = params.heading_noise;
    let mut heading = agent.heading + rng.random_range(-noise..=noise);
    let mut pos = Point::new(
        agent.position.x + world.agent_speed * heading.cos(),
        agent.position.y + world.agent_speed * heading.sin(),
    );
    let r = pos.distance(world.hub);
    if r > world.max_distance {
        // mirror back inside the boundary circle and turn around
        let back = (2.0 * world.max_distance - r).max(0.0) / r;
        pos = Point::new(
            world.hub.x + (pos.x - world.hub.x) * back,
            world.hub.y + (pos.y - world.hub.y) * back,
        );
        heading += PI;
    }
    agent.position = pos;
    agent.heading = heading.rem_euclid(TAU);

    let nearest = world
        .sites
        .iter()
        .map(|s| (s, s.position.distance(pos)))
        .filter(|&(_, d)| d <= world.site_radius)
        .min_by(|a, b| a.1.total_cmp(&b.1));
    if let Some((site, _)) = nearest {
        if rng.random_bool(params.discover(site.quality, true)) {
            commit_to(agent, site.id, world, params)?;
            agent.state = AgentState::Assess;
            agent.position = site.position;
            return Ok(());
        }
    }
    let turn_home = match params.explore_limit {
        Some(limit) if pos.distance(world.hub) >= limit => true,
        _ => rng.random_bool(params.p3),
    };
    if turn_home {
        agent.state = AgentState::TravelHubObserve;
        agent.target = Some(world.hub);
    }
    Ok(())
}
