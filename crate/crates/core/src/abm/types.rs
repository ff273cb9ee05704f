use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One of the seven behavioural states of a colony member.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgentState {
    #[serde(rename = "O")]
    Observe,
    #[serde(rename = "E")]
    Explore,
    #[serde(rename = "A")]
    Assess,
    #[serde(rename = "R")]
    Recruit,
    #[serde(rename = "T_HO")]
    TravelHubObserve,
    #[serde(rename = "T_HR")]
    TravelHubRecruit,
    #[serde(rename = "T_S")]
    TravelSite,
}

impl AgentState {
    pub const ALL: [AgentState; 7] = [
        AgentState::Observe,
        AgentState::Explore,
        AgentState::Assess,
        AgentState::Recruit,
        AgentState::TravelHubObserve,
        AgentState::TravelHubRecruit,
        AgentState::TravelSite,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            AgentState::Observe => "O",
            AgentState::Explore => "E",
            AgentState::Assess => "A",
            AgentState::Recruit => "R",
            AgentState::TravelHubObserve => "T_HO",
            AgentState::TravelHubRecruit => "T_HR",
            AgentState::TravelSite => "T_S",
        }
    }

    /// States in which the agent is committed to a particular site.
    pub fn is_site_oriented(self) -> bool {
        matches!(
            self,
            AgentState::Assess
                | AgentState::Recruit
                | AgentState::TravelHubRecruit
                | AgentState::TravelSite
        )
    }

    pub fn is_travel(self) -> bool {
        matches!(
            self,
            AgentState::TravelHubObserve | AgentState::TravelHubRecruit | AgentState::TravelSite
        )
    }
}

impl std::fmt::Display for AgentState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Point::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// A candidate nest site.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub id: usize,
    pub position: Point,
    pub quality: f64,
}

/// A single colony member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: usize,
    pub state: AgentState,
    pub position: Point,
    /// Direction of travel in radians. Only meaningful while exploring.
    pub heading: f64,
    pub favored_site: Option<usize>,
    pub reassess_remaining: u32,
    pub target: Option<Point>,
}

impl Agent {
    pub fn observer(id: usize, hub: Point) -> Self {
        Agent {
            id,
            state: AgentState::Observe,
            position: hub,
            heading: 0.0,
            favored_site: None,
            reassess_remaining: 0,
            target: None,
        }
    }

    /// Checks the per-agent invariants against a world.
    pub fn validate(&self, world: &WorldConfig) -> Result<()> {
        let oriented = self.state.is_site_oriented();
        match (oriented, self.favored_site) {
            (true, None) => {
                return Err(Error::Invariant(format!(
                    "agent {} in {} has no favored site",
                    self.id, self.state
                )))
            }
            (false, Some(s)) => {
                return Err(Error::Invariant(format!(
                    "agent {} in {} favors site {s}",
                    self.id, self.state
                )))
            }
            _ => {}
        }
        if let Some(s) = self.favored_site {
            if world.site(s).is_none() {
                return Err(Error::Invariant(format!(
                    "agent {} favors unknown site {s}",
                    self.id
                )));
            }
        }
        if self.reassess_remaining > 0 && self.favored_site.is_none() {
            return Err(Error::Invariant(format!(
                "agent {} has a reassess budget without a favored site",
                self.id
            )));
        }
        if !(self.position.x.is_finite() && self.position.y.is_finite()) {
            return Err(Error::Invariant(format!("agent {} position is not finite", self.id)));
        }
        // small slack for floating point reflection at the boundary
        let reach = self.position.distance(world.hub);
        if reach > world.max_distance * (1.0 + 1e-9) {
            return Err(Error::Invariant(format!(
                "agent {} is {reach:.3} from the hub, beyond {}",
                self.id, world.max_distance
            )));
        }
        if self.state.is_travel() && self.target.is_none() {
            return Err(Error::Invariant(format!(
                "agent {} in {} has no destination",
                self.id, self.state
            )));
        }
        Ok(())
    }
}

/// Geometry and population of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub hub: Point,
    pub max_distance: f64,
    pub sites: Vec<Site>,
    pub num_agents: usize,
    pub quorum_fraction: f64,
    pub max_ticks: u64,
    pub agent_speed: f64,
    pub site_radius: f64,
    pub rng_seed: u64,
}

impl WorldConfig {
    pub const DEFAULT_SPEED: f64 = 2.0;
    pub const DEFAULT_SITE_RADIUS: f64 = 10.0;

    /// A world with the hub at the origin and the default movement scales.
    pub fn new(
        max_distance: f64,
        sites: Vec<Site>,
        num_agents: usize,
        quorum_fraction: f64,
        max_ticks: u64,
        rng_seed: u64,
    ) -> Self {
        WorldConfig {
            hub: Point::ORIGIN,
            max_distance,
            sites,
            num_agents,
            quorum_fraction,
            max_ticks,
            agent_speed: Self::DEFAULT_SPEED,
            site_radius: Self::DEFAULT_SITE_RADIUS,
            rng_seed,
        }
    }

    pub fn site(&self, id: usize) -> Option<&Site> {
        self.sites.iter().find(|s| s.id == id)
    }

    pub fn quality(&self, id: usize) -> Option<f64> {
        self.site(id).map(|s| s.quality)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_agents == 0 {
            return Err(Error::Config("the colony needs at least one agent".into()));
        }
        if !(self.max_distance > 0.0) {
            return Err(Error::Config("max_distance must be positive".into()));
        }
        if !(self.quorum_fraction > 0.0 && self.quorum_fraction < 1.0) {
            return Err(Error::Config(format!(
                "quorum fraction {} is outside (0, 1)",
                self.quorum_fraction
            )));
        }
        if !(self.agent_speed > 0.0) || !(self.site_radius >= 0.0) {
            return Err(Error::Config("agent_speed and site_radius must be positive".into()));
        }
        for (i, site) in self.sites.iter().enumerate() {
            if !(site.quality > 0.0 && site.quality <= 1.0) {
                return Err(Error::Config(format!(
                    "site {} quality {} is outside (0, 1]",
                    site.id, site.quality
                )));
            }
            if site.position.distance(self.hub) > self.max_distance {
                return Err(Error::Config(format!("site {} is beyond max_distance", site.id)));
            }
            if self.sites[..i].iter().any(|s| s.id == site.id) {
                return Err(Error::Config(format!("duplicate site id {}", site.id)));
            }
        }
        Ok(())
    }

    /// Id of the highest-quality site, lowest id on ties.
    pub fn best_site(&self) -> Option<usize> {
        best_site(&self.sites)
    }
}

pub(crate) fn best_site(sites: &[Site]) -> Option<usize> {
    sites
        .iter()
        .fold(None::<&Site>, |best, s| match best {
            Some(b) if b.quality >= s.quality => Some(b),
            _ => Some(s),
        })
        .map(|s| s.id)
}
