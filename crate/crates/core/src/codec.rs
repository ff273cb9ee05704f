//! Canonical, anonymised encodings of a colony snapshot.
//!
//! Each agent becomes a fixed-width record; records are sorted and
//! concatenated with agent ids dropped, so any relabelling of agents maps to
//! the same tensor.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::abm::{Agent, AgentState, Site};
use crate::{Error, Result};

/// Indicator column order of the one-hot relation. The float state code of
/// column `i` is `i / 6`.
pub const STATE_COLUMNS: [AgentState; 7] = [
    AgentState::Recruit,
    AgentState::Assess,
    AgentState::TravelHubRecruit,
    AgentState::TravelSite,
    AgentState::Observe,
    AgentState::Explore,
    AgentState::TravelHubObserve,
];

pub const ONEHOT_WIDTH: usize = 8;
pub const FLOAT_WIDTH: usize = 4;
pub const DEFAULT_MAX_AGENTS: usize = 10;
pub const PADDING: [f64; FLOAT_WIDTH] = [0.0, 1.0, 1.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    OneHot,
    Float,
}

impl Encoding {
    pub fn record_width(self) -> usize {
        match self {
            Encoding::OneHot => ONEHOT_WIDTH,
            Encoding::Float => FLOAT_WIDTH,
        }
    }

    fn tag(self) -> u8 {
        match self {
            Encoding::OneHot => 1,
            Encoding::Float => 2,
        }
    }
}

/// Encoding choice used when turning trajectories into graph nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodecSettings {
    pub encoding: Encoding,
    pub max_agents: usize,
}

impl Default for CodecSettings {
    fn default() -> Self {
        CodecSettings { encoding: Encoding::Float, max_agents: DEFAULT_MAX_AGENTS }
    }
}

impl CodecSettings {
    pub fn onehot() -> Self {
        CodecSettings { encoding: Encoding::OneHot, ..Self::default() }
    }

    pub fn encode(&self, snapshot: &[Agent], sites: &[Site], max_distance: f64) -> Result<StateTensor> {
        match self.encoding {
            Encoding::OneHot => Ok(onehot_tensor(&encode_onehot(snapshot, sites))),
            Encoding::Float => encode_float(snapshot, sites, max_distance, self.max_agents),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneHotRecord {
    pub quality: f64,
    pub indicators: [u8; 7],
    pub id: usize,
}

impl OneHotRecord {
    /// The id-free tuple `(Q, R, A, T_HR, T_S, O, E, T_HO)`.
    pub fn values(&self) -> [f64; ONEHOT_WIDTH] {
        let mut v = [0.0; ONEHOT_WIDTH];
        v[0] = self.quality;
        for (slot, &bit) in v[1..].iter_mut().zip(&self.indicators) {
            *slot = f64::from(bit);
        }
        v
    }
}

fn column(state: AgentState) -> usize {
    STATE_COLUMNS.iter().position(|&s| s == state).expect("every state has a column")
}

fn favored<'a>(agent: &Agent, sites: &'a [Site]) -> Option<&'a Site> {
    agent.favored_site.and_then(|id| sites.iter().find(|s| s.id == id))
}

pub fn encode_onehot(snapshot: &[Agent], sites: &[Site]) -> Vec<OneHotRecord> {
    snapshot
        .iter()
        .map(|a| {
            let mut indicators = [0u8; 7];
            indicators[column(a.state)] = 1;
            OneHotRecord {
                quality: favored(a, sites).map_or(0.0, |s| s.quality) + 0.0,
                indicators,
                id: a.id,
            }
        })
        .collect()
}

pub fn state_to_float(state: AgentState) -> f64 {
    column(state) as f64 / 6.0
}

/// Inverse of [`state_to_float`] on the exact grid.
pub fn float_to_state(code: f64) -> Option<AgentState> {
    STATE_COLUMNS.iter().copied().find(|&s| state_to_float(s) == code)
}

/// `[q, S, x_s / D, y_s / D]` for one agent.
pub fn float_record(agent: &Agent, sites: &[Site], max_distance: f64) -> [f64; FLOAT_WIDTH] {
    match favored(agent, sites) {
        Some(site) => [
            site.quality + 0.0,
            state_to_float(agent.state),
            site.position.x / max_distance + 0.0,
            site.position.y / max_distance + 0.0,
        ],
        None => [0.0, state_to_float(agent.state), 0.0, 0.0],
    }
}

pub fn encode_float(
    snapshot: &[Agent],
    sites: &[Site],
    max_distance: f64,
    max_agents: usize,
) -> Result<StateTensor> {
    if snapshot.len() > max_agents {
        return Err(Error::Capacity { count: snapshot.len(), max: max_agents });
    }
    let mut records: Vec<[f64; FLOAT_WIDTH]> =
        snapshot.iter().map(|a| float_record(a, sites, max_distance)).collect();
    records.extend(std::iter::repeat_n(PADDING, max_agents - snapshot.len()));
    canonicalize(&records, Encoding::Float)
}

fn onehot_tensor(records: &[OneHotRecord]) -> StateTensor {
    let rows: Vec<[f64; ONEHOT_WIDTH]> = records.iter().map(OneHotRecord::values).collect();
    canonicalize(&rows, Encoding::OneHot).expect("one-hot rows have uniform width")
}

pub fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or_else(|| a.len().cmp(&b.len()))
}

fn is_padding(r: &[f64]) -> bool {
    r == PADDING
}

/// Sorts records ascending lexicographically and concatenates them. For the
/// float encoding, padding records go after all real records.
pub fn canonicalize<R: AsRef<[f64]>>(records: &[R], encoding: Encoding) -> Result<StateTensor> {
    let width = encoding.record_width();
    if let Some(bad) = records.iter().find(|r| r.as_ref().len() != width) {
        return Err(Error::Shape(format!(
            "record of width {} in a {width}-wide encoding",
            bad.as_ref().len()
        )));
    }
    let mut rows: Vec<&[f64]> = records.iter().map(AsRef::as_ref).collect();
    rows.sort_by(|a, b| {
        let pad = match encoding {
            Encoding::Float => is_padding(a).cmp(&is_padding(b)),
            Encoding::OneHot => Ordering::Equal,
        };
        pad.then_with(|| lex_cmp(a, b))
    });
    Ok(StateTensor { encoding, values: rows.concat() })
}

/// A canonical collective-state tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateTensor {
    pub encoding: Encoding,
    pub values: Vec<f64>,
}

impl StateTensor {
    pub fn records(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.encoding.record_width())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// States of the real (non-padding) agent records.
    pub fn agent_states(&self) -> Vec<AgentState> {
        match self.encoding {
            Encoding::OneHot => self
                .records()
                .filter_map(|r| r[1..].iter().position(|&b| b == 1.0).map(|i| STATE_COLUMNS[i]))
                .collect(),
            Encoding::Float => self
                .records()
                .filter(|r| !is_padding(r))
                .filter_map(|r| float_to_state(r[1]))
                .collect(),
        }
    }

    pub fn site_oriented_count(&self) -> usize {
        self.agent_states().into_iter().filter(|s| s.is_site_oriented()).count()
    }

    /// Checks sortedness and the per-encoding record laws.
    pub fn check_canonical(&self) -> Result<()> {
        let width = self.encoding.record_width();
        if !self.values.len().is_multiple_of(width) {
            return Err(Error::NonCanonical(format!(
                "length {} is not a multiple of {width}",
                self.values.len()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonCanonical("non-finite value".into()));
        }
        let rows: Vec<&[f64]> = self.records().collect();
        match self.encoding {
            Encoding::OneHot => {
                for r in &rows {
                    let ones = r[1..].iter().filter(|&&b| b == 1.0).count();
                    let zeros = r[1..].iter().filter(|&&b| b == 0.0).count();
                    if ones != 1 || zeros != 6 {
                        return Err(Error::NonCanonical("record is not one-hot".into()));
                    }
                }
                if rows.windows(2).any(|w| lex_cmp(w[0], w[1]).is_gt()) {
                    return Err(Error::NonCanonical("records are not sorted".into()));
                }
            }
            Encoding::Float => {
                let real = rows.iter().take_while(|r| !is_padding(r)).count();
                if rows[real..].iter().any(|r| !is_padding(r)) {
                    return Err(Error::NonCanonical("padding is not trailing".into()));
                }
                if rows[..real].iter().any(|r| float_to_state(r[1]).is_none()) {
                    return Err(Error::NonCanonical("state code off the grid".into()));
                }
                if rows[..real].windows(2).any(|w| lex_cmp(w[0], w[1]).is_gt()) {
                    return Err(Error::NonCanonical("records are not sorted".into()));
                }
            }
        }
        Ok(())
    }

    pub fn to_csv_row(&self) -> String {
        self.values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")
    }
}

/// Hex SHA-256 of the encoding tag and the exact bit patterns of the values.
pub fn tensor_key(tensor: &StateTensor) -> Result<String> {
    tensor.check_canonical()?;
    let mut h = Sha256::new();
    h.update([tensor.encoding.tag()]);
    h.update((tensor.values.len() as u64).to_le_bytes());
    for v in &tensor.values {
        h.update(v.to_bits().to_le_bytes());
    }
    Ok(hex::encode(h.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abm::Point;

    fn agent(id: usize, state: AgentState, site: Option<usize>) -> Agent {
        let mut a = Agent::observer(id, Point::ORIGIN);
        a.state = state;
        a.favored_site = site;
        a
    }

    fn table_sites() -> Vec<Site> {
        vec![
            Site { id: 0, position: Point::new(250.0, 0.0), quality: 1.0 },
            Site { id: 1, position: Point::new(0.0, -250.0), quality: 0.5 },
        ]
    }

    #[test]
    fn onehot_rows_match_relation() {
        let sites = table_sites();
        let rows = encode_onehot(
            &[agent(2, AgentState::TravelSite, Some(0)), agent(1, AgentState::TravelHubObserve, None)],
            &sites,
        );
        assert_eq!(rows[0].values(), [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(rows[0].id, 2);
        assert_eq!(rows[1].values(), [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let o = encode_onehot(&[agent(0, AgentState::Observe, None)], &sites);
        assert_eq!(o[0].values(), [0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn state_codes() {
        assert_eq!(state_to_float(AgentState::Recruit), 0.0);
        assert_eq!(state_to_float(AgentState::Assess), 1.0 / 6.0);
        assert_eq!(state_to_float(AgentState::Observe), 4.0 / 6.0);
        assert_eq!(state_to_float(AgentState::TravelHubObserve), 1.0);
        for s in AgentState::ALL {
            assert_eq!(float_to_state(state_to_float(s)), Some(s));
        }
    }

    #[test]
    fn relation_sorts_ascending() {
        let sites = table_sites();
        let colony = [
            agent(2, AgentState::TravelSite, Some(0)),
            agent(0, AgentState::Recruit, Some(1)),
            agent(3, AgentState::Assess, Some(1)),
            agent(1, AgentState::TravelHubObserve, None),
        ];
        let t = CodecSettings::onehot().encode(&colony, &sites, 1000.0).unwrap();
        let rows: Vec<&[f64]> = t.records().collect();
        // hand-sorted: Q=0 row, then (0.5, R=0, A=1), (0.5, R=1), then Q=1.0
        assert_eq!(rows[0], &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(rows[1], &[0.5, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(rows[2], &[0.5, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(rows[3], &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(t.len(), 8 * 4);
    }

    #[test]
    fn float_padding_and_capacity() {
        let sites = table_sites();
        let five: Vec<Agent> = (0..5).map(|i| agent(i, AgentState::Observe, None)).collect();
        let t = encode_float(&five, &sites, 1000.0, 10).unwrap();
        assert_eq!(t.len(), 40);
        let rows: Vec<&[f64]> = t.records().collect();
        assert!(rows[..5].iter().all(|r| *r == [0.0, 4.0 / 6.0, 0.0, 0.0]));
        assert!(rows[5..].iter().all(|r| *r == PADDING));

        let empty = encode_float(&[], &sites, 1000.0, 10).unwrap();
        assert!(empty.records().all(|r| r == PADDING));

        let eleven: Vec<Agent> = (0..11).map(|i| agent(i, AgentState::Observe, None)).collect();
        assert!(matches!(encode_float(&eleven, &sites, 1000.0, 10), Err(Error::Capacity { .. })));
    }

    #[test]
    fn float_record_normalizes_site() {
        let sites = table_sites();
        let r = float_record(&agent(0, AgentState::Recruit, Some(1)), &sites, 1000.0);
        assert_eq!(r, [0.5, 0.0, 0.0, -0.25]);
    }

    #[test]
    fn keys_detect_changes_and_noncanonical_input() {
        let sites = table_sites();
        let a = [agent(0, AgentState::Observe, None), agent(1, AgentState::Explore, None)];
        let b = [agent(0, AgentState::Observe, None), agent(1, AgentState::TravelHubObserve, None)];
        let ka = tensor_key(&encode_float(&a, &sites, 1000.0, 10).unwrap()).unwrap();
        let ka2 = tensor_key(&encode_float(&a, &sites, 1000.0, 10).unwrap()).unwrap();
        let kb = tensor_key(&encode_float(&b, &sites, 1000.0, 10).unwrap()).unwrap();
        assert_eq!(ka, ka2);
        assert_ne!(ka, kb);

        let mut bad = encode_float(&a, &sites, 1000.0, 10).unwrap();
        bad.values.swap(0, 4);
        bad.values.swap(1, 5);
        bad.values.swap(2, 6);
        bad.values.swap(3, 7);
        assert!(matches!(tensor_key(&bad), Err(Error::NonCanonical(_))));
    }

    #[test]
    fn canonicalize_is_idempotent_on_singleton() {
        let t = canonicalize(&[[0.3, 0.5, 0.1, 0.2]], Encoding::Float).unwrap();
        let again = canonicalize(&t.records().collect::<Vec<_>>(), Encoding::Float).unwrap();
        assert_eq!(t, again);
        assert!(canonicalize(&[vec![1.0, 2.0]], Encoding::Float).is_err());
    }
}
