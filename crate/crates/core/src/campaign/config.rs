use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::abm::{sample_qualities, TransitionParams};
use crate::rng::{derive_seed, seeded};
use crate::codec::Encoding;
use crate::{Error, Result};

pub(crate) const TAG_QUALITY: u64 = 1;
pub(crate) const TAG_WORLD: u64 = 2;
pub(crate) const TAG_POOL: u64 = 3;
pub(crate) const TAG_TRIAL: u64 = 4;

const RUNTIMES: [u64; 3] = [1000, 10000, 35000];
const DISTANCES: [f64; 3] = [100.0, 150.0, 200.0];
const AGENTS: [usize; 2] = [5, 10];
const SITES: [usize; 3] = [2, 3, 4];

/// Sweep settings. The first block mirrors the transition parameters; the last block holds
/// settings of the sweep itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub p_1: f64,
    pub p_2: f64,
    pub p_3: f64,
    pub p_4: f64,
    pub p_r: f64,
    pub gamma_exponent: f64,
    pub threshold: f64,
    pub min_quality: f64,
    pub max_quality_difference: f64,
    pub runtimes: Vec<u64>,
    pub site_distances: Vec<f64>,
    pub maximum_distance: f64,
    pub agents: Vec<usize>,
    pub sites: Vec<usize>,

    /// Quality vectors sampled per site count.
    pub quality_vectors: usize,
    pub pool_size: usize,
    pub pool_ticks: u64,
    pub repetitions: usize,
    pub seed: u64,
    pub encoding: Encoding,
    pub write_trajectories: bool,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        let p = TransitionParams::table2();
        CampaignConfig {
            p_1: p.p1,
            p_2: p.p2,
            p_3: p.p3,
            p_4: p.p4,
            p_r: p.recruit_pull_rate,
            gamma_exponent: p.gamma_exponent,
            threshold: 0.5,
            min_quality: 0.5,
            max_quality_difference: 0.5,
            runtimes: RUNTIMES.to_vec(),
            site_distances: DISTANCES.to_vec(),
            maximum_distance: 1000.0,
            agents: AGENTS.to_vec(),
            sites: SITES.to_vec(),
            quality_vectors: 5,
            pool_size: 10,
            pool_ticks: 1000,
            repetitions: 10,
            seed: 0,
            encoding: Encoding::Float,
            write_trajectories: true,
        }
    }
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: CampaignConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn params(&self) -> TransitionParams {
        TransitionParams {
            p1: self.p_1,
            p2: self.p_2,
            p3: self.p_3,
            p4: self.p_4,
            recruit_pull_rate: self.p_r,
            gamma_exponent: self.gamma_exponent,
            ..TransitionParams::table2()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params().validate()?;
        fn subset<T: PartialEq + std::fmt::Debug>(name: &str, got: &[T], allowed: &[T]) -> Result<()> {
            if got.is_empty() {
                return Err(Error::Config(format!("{name} is empty")));
            }
            match got.iter().find(|v| !allowed.contains(v)) {
                Some(v) => Err(Error::Config(format!("{name} value {v:?} is not one of {allowed:?}"))),
                None => Ok(()),
            }
        }
        subset("runtimes", &self.runtimes, &RUNTIMES)?;
        subset("site_distances", &self.site_distances, &DISTANCES)?;
        subset("agents", &self.agents, &AGENTS)?;
        subset("sites", &self.sites, &SITES)?;
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("threshold {} is outside (0, 1)", self.threshold)));
        }
        if self.repetitions == 0 || self.quality_vectors == 0 || self.pool_size == 0 {
            return Err(Error::Config("repetitions, quality_vectors and pool_size must be >= 1".into()));
        }
        if self.agents.iter().any(|&k| k > crate::codec::DEFAULT_MAX_AGENTS) && self.encoding == Encoding::Float {
            return Err(Error::Config("float tensors hold at most 10 agents".into()));
        }
        Ok(())
    }
}

/// The small two-site study: one world, colonies started from random states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Experiment1Config {
    pub trials: usize,
    pub maximum_distance: f64,
    pub qualities: Vec<f64>,
    pub threshold: f64,
    pub agents: usize,
    pub runtime: u64,
    pub seed: u64,
    pub encoding: Encoding,
    pub write_trajectories: bool,
}

impl Default for Experiment1Config {
    fn default() -> Self {
        Experiment1Config {
            trials: 500,
            maximum_distance: 100.0,
            qualities: vec![1.0, 0.5],
            // three of ten agents
            threshold: 0.25,
            agents: 10,
            runtime: 10000,
            seed: 0,
            encoding: Encoding::OneHot,
            write_trajectories: true,
        }
    }
}

impl Experiment1Config {
    pub fn params(&self) -> TransitionParams {
        TransitionParams::experiment1(self.maximum_distance)
    }

    /// Sites sit a quarter of the world radius from the hub.
    pub fn site_distance(&self) -> f64 {
        self.maximum_distance / 4.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 || self.qualities.is_empty() || self.agents == 0 {
            return Err(Error::Config("trials, qualities and agents must be non-empty".into()));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("threshold {} is outside (0, 1)", self.threshold)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Campaign {
    Table2(CampaignConfig),
    Experiment1(Experiment1Config),
}

impl Campaign {
    pub fn seed(&self) -> u64 {
        match self {
            Campaign::Table2(c) => c.seed,
            Campaign::Experiment1(c) => c.seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            Campaign::Table2(c) => c.seed = seed,
            Campaign::Experiment1(c) => c.seed = seed,
        }
        self
    }

    pub fn encoding(&self) -> Encoding {
        match self {
            Campaign::Table2(c) => c.encoding,
            Campaign::Experiment1(c) => c.encoding,
        }
    }

    pub fn params(&self) -> TransitionParams {
        match self {
            Campaign::Table2(c) => c.params(),
            Campaign::Experiment1(c) => c.params(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Campaign::Table2(c) => c.validate(),
            Campaign::Experiment1(c) => c.validate(),
        }
    }

    /// Grid cells in execution order.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        match self {
            Campaign::Experiment1(c) => Ok(vec![Cell {
                id: "experiment1".into(),
                runtime: c.runtime,
                distance: c.site_distance(),
                agents: c.agents,
                quality_index: 0,
                qualities: c.qualities.clone(),
            }]),
            Campaign::Table2(c) => {
                let vectors = quality_vectors(c)?;
                let mut cells = Vec::new();
                for &runtime in &c.runtimes {
                    for &distance in &c.site_distances {
                        for &agents in &c.agents {
                            for &n in &c.sites {
                                for (qi, q) in vectors[&n].iter().enumerate() {
                                    cells.push(Cell {
                                        id: format!("T{runtime}_d{distance}_K{agents}_N{n}_q{qi}"),
                                        runtime,
                                        distance,
                                        agents,
                                        quality_index: qi,
                                        qualities: q.clone(),
                                    });
                                }
                            }
                        }
                    }
                }
                Ok(cells)
            }
        }
    }
}

/// The seeded quality vectors of every configured site count. Each site
/// count draws from its own stream, so editing one leaves the others intact.
pub fn quality_vectors(config: &CampaignConfig) -> Result<BTreeMap<usize, Vec<Vec<f64>>>> {
    let mut out = BTreeMap::new();
    for &n in &config.sites {
        let mut rng = seeded(derive_seed(config.seed, &[TAG_QUALITY, n as u64]));
        let vs = (0..config.quality_vectors)
            .map(|_| sample_qualities(n, config.min_quality, config.max_quality_difference, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        out.insert(n, vs);
    }
    Ok(out)
}

/// One combination of grid values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: String,
    pub runtime: u64,
    pub distance: f64,
    pub agents: usize,
    pub quality_index: usize,
    pub qualities: Vec<f64>,
}

impl Cell {
    pub fn sites(&self) -> usize {
        self.qualities.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_overrides() {
        let c = CampaignConfig::default();
        assert_eq!(CampaignConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
        let small = CampaignConfig::from_toml("runtimes = [1000]\nagents = [5]\nrepetitions = 2\n").unwrap();
        assert_eq!(small.runtimes, vec![1000]);
        assert_eq!(small.p_r, 0.1);
    }

    #[test]
    fn malformed_configs_fail() {
        assert!(CampaignConfig::from_toml("bogus_key = 1").is_err());
        assert!(CampaignConfig::from_toml("runtimes = [500]").is_err());
        assert!(CampaignConfig::from_toml("repetitions = 0").is_err());
        assert!(CampaignConfig::from_toml("p_1 = 2.0").is_err());
    }
}
