//! Collective-state transition graphs.
//!
//! Nodes are unique canonical tensors, keyed by [`tensor_key`]; directed
//! edges count observed tick-to-tick transitions between distinct tensors.
//! Consecutive identical tensors collapse, so there are no self-loops.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::abm::{Outcome, Site, Trajectory};
use crate::analysis::NodeLabel;
use crate::codec::{tensor_key, CodecSettings, Encoding, StateTensor};
use crate::{Error, Result};

/// Largest graph for which a dense adjacency matrix is built.
pub const MAX_DENSE_NODES: usize = 5_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub tensor: StateTensor,
    pub visit_count: u64,
    pub label: Option<NodeLabel>,
}

/// The collapsed key path of one trial and how it ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEntry {
    pub simulation: u64,
    pub condition_id: usize,
    pub keys: Vec<String>,
    pub outcome: Outcome,
    pub sites: Vec<Site>,
}

impl TrajectoryEntry {
    pub fn max_quality(&self) -> Option<f64> {
        self.sites.iter().map(|s| s.quality).reduce(f64::max)
    }

    pub fn chosen_quality(&self) -> Option<f64> {
        let c = self.outcome.chosen()?;
        self.sites.iter().find(|s| s.id == c).map(|s| s.quality)
    }

    /// Converged on a site of maximal quality.
    pub fn succeeded(&self) -> bool {
        matches!((self.chosen_quality(), self.max_quality()), (Some(c), Some(m)) if c >= m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveGraph {
    pub encoding: Encoding,
    nodes: BTreeMap<String, Node>,
    edges: BTreeMap<(String, String), u64>,
    trajectories: Vec<TrajectoryEntry>,
}

impl CollectiveGraph {
    pub fn new(encoding: Encoding) -> Self {
        CollectiveGraph {
            encoding,
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
            trajectories: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &BTreeMap<String, Node> {
        &self.nodes
    }

    pub fn node(&self, key: &str) -> Option<&Node> {
        self.nodes.get(key)
    }

    pub fn edges(&self) -> &BTreeMap<(String, String), u64> {
        &self.edges
    }

    pub fn trajectories(&self) -> &[TrajectoryEntry] {
        &self.trajectories
    }

    /// Node keys in ascending order.
    pub fn node_order(&self) -> Vec<String> {
        self.nodes.keys().cloned().collect()
    }

    pub fn set_label(&mut self, key: &str, label: NodeLabel) -> bool {
        match self.nodes.get_mut(key) {
            Some(n) => {
                n.label = Some(label);
                true
            }
            None => false,
        }
    }

    /// Encodes every snapshot of `t` and folds the collapsed path into the
    /// graph. `simulation` tags the registry entry.
    pub fn add_trajectory(&mut self, t: &Trajectory, settings: &CodecSettings, simulation: u64) -> Result<()> {
        if settings.encoding != self.encoding {
            return Err(Error::Graph(format!(
                "graph holds {:?} tensors, settings produce {:?}",
                self.encoding, settings.encoding
            )));
        }
        if t.snapshots.is_empty() {
            return Err(Error::Graph("trajectory has no snapshots".into()));
        }
        let mut path: Vec<(String, StateTensor)> = Vec::new();
        for snap in &t.snapshots {
            let tensor = settings.encode(snap, &t.sites, t.max_distance)?;
            let key = tensor_key(&tensor)?;
            if path.last().map(|(k, _)| k) != Some(&key) {
                path.push((key, tensor));
            }
        }
        for (key, tensor) in &path {
            self.nodes
                .entry(key.clone())
                .or_insert_with(|| Node { tensor: tensor.clone(), visit_count: 0, label: None })
                .visit_count += 1;
        }
        for w in path.windows(2) {
            *self.edges.entry((w[0].0.clone(), w[1].0.clone())).or_insert(0) += 1;
        }
        self.trajectories.push(TrajectoryEntry {
            simulation,
            condition_id: t.condition_id,
            keys: path.into_iter().map(|(k, _)| k).collect(),
            outcome: t.outcome,
            sites: t.sites.clone(),
        });
        Ok(())
    }

    /// Adds all nodes, edges and registry entries of `other`, summing counts.
    pub fn merge(&mut self, other: &CollectiveGraph) -> Result<()> {
        if other.encoding != self.encoding {
            return Err(Error::Graph("cannot merge graphs with different encodings".into()));
        }
        for (key, node) in &other.nodes {
            match self.nodes.get_mut(key) {
                Some(n) => {
                    n.visit_count += node.visit_count;
                    if n.label.is_none() {
                        n.label = node.label;
                    }
                }
                None => {
                    self.nodes.insert(key.clone(), node.clone());
                }
            }
        }
        for (edge, count) in &other.edges {
            *self.edges.entry(edge.clone()).or_insert(0) += count;
        }
        self.trajectories.extend(other.trajectories.iter().cloned());
        Ok(())
    }

    /// Edge-direction-blind neighbour lists over `ordering`.
    pub fn undirected_neighbors(&self, ordering: &[String]) -> Result<Vec<Vec<usize>>> {
        let index = index_of(ordering, &self.nodes)?;
        let mut nbrs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ordering.len()];
        for (src, dst) in self.edges.keys() {
            if let (Some(&a), Some(&b)) = (index.get(src.as_str()), index.get(dst.as_str())) {
                if a != b {
                    nbrs[a].insert(b);
                    nbrs[b].insert(a);
                }
            }
        }
        Ok(nbrs.into_iter().map(|s| s.into_iter().collect()).collect())
    }

    /// Symmetric 0/1 matrix, 1 where an edge exists in either direction.
    pub fn adjacency_matrix(&self, ordering: &[String]) -> Result<Array2<f64>> {
        if ordering.len() > MAX_DENSE_NODES {
            return Err(Error::Graph(format!(
                "{} nodes exceed the dense adjacency limit of {MAX_DENSE_NODES}",
                ordering.len()
            )));
        }
        let nbrs = self.undirected_neighbors(ordering)?;
        let mut a = Array2::zeros((ordering.len(), ordering.len()));
        for (i, row) in nbrs.iter().enumerate() {
            for &j in row {
                a[[i, j]] = 1.0;
            }
        }
        Ok(a)
    }

    /// Per-source transition probabilities from edge counts.
    pub fn edge_probabilities(&self) -> BTreeMap<String, Vec<(String, f64)>> {
        let mut out: BTreeMap<String, Vec<(String, u64)>> = BTreeMap::new();
        for ((src, dst), &c) in &self.edges {
            out.entry(src.clone()).or_default().push((dst.clone(), c));
        }
        self.nodes
            .keys()
            .map(|k| {
                let row = out.remove(k).unwrap_or_default();
                let total: u64 = row.iter().map(|(_, c)| c).sum();
                let probs = row
                    .into_iter()
                    .map(|(d, c)| (d, c as f64 / total as f64))
                    .collect();
                (k.clone(), probs)
            })
            .collect()
    }

    /// Subgraph induced by the largest weakly connected component. Among
    /// equally large components the one holding the smallest key wins.
    pub fn largest_weakly_connected_component(&self) -> Result<CollectiveGraph> {
        if self.nodes.is_empty() {
            return Err(Error::Graph("graph is empty".into()));
        }
        let order = self.node_order();
        let nbrs = self.undirected_neighbors(&order)?;
        let mut seen = vec![false; order.len()];
        let mut best: Vec<usize> = Vec::new();
        // ascending start order means each component is first met at its
        // smallest key, so a strict `>` keeps the tie-break
        for start in 0..order.len() {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &u in &nbrs[v] {
                    if !seen[u] {
                        seen[u] = true;
                        comp.push(u);
                        queue.push_back(u);
                    }
                }
            }
            if comp.len() > best.len() {
                best = comp;
            }
        }
        let keep: BTreeSet<&str> = best.iter().map(|&i| order[i].as_str()).collect();
        Ok(self.induced(&keep))
    }

    fn induced(&self, keep: &BTreeSet<&str>) -> CollectiveGraph {
        CollectiveGraph {
            encoding: self.encoding,
            nodes: self
                .nodes
                .iter()
                .filter(|(k, _)| keep.contains(k.as_str()))
                .map(|(k, n)| (k.clone(), n.clone()))
                .collect(),
            edges: self
                .edges
                .iter()
                .filter(|((s, d), _)| keep.contains(s.as_str()) && keep.contains(d.as_str()))
                .map(|(e, &c)| (e.clone(), c))
                .collect(),
            trajectories: self
                .trajectories
                .iter()
                .filter(|t| t.keys.first().is_some_and(|k| keep.contains(k.as_str())))
                .cloned()
                .collect(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = GraphFile::from(self);
        let text = serde_json::to_string(&file)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: GraphFile = serde_json::from_str(&text)?;
        CollectiveGraph::try_from(file)
    }
}

fn index_of<'a>(
    ordering: &'a [String],
    nodes: &BTreeMap<String, Node>,
) -> Result<std::collections::HashMap<&'a str, usize>> {
    let mut index = std::collections::HashMap::with_capacity(ordering.len());
    for (i, k) in ordering.iter().enumerate() {
        if !nodes.contains_key(k) {
            return Err(Error::Graph(format!("ordering names unknown node {k}")));
        }
        if index.insert(k.as_str(), i).is_some() {
            return Err(Error::Graph(format!("ordering repeats node {k}")));
        }
    }
    if index.len() != nodes.len() {
        return Err(Error::Graph(format!(
            "ordering covers {} of {} nodes",
            index.len(),
            nodes.len()
        )));
    }
    Ok(index)
}

/// Builds the graph of one simulation's trajectory set.
pub fn subgraph_sample(trajectories: &[Trajectory], settings: &CodecSettings, simulation: u64) -> Result<CollectiveGraph> {
    if trajectories.is_empty() {
        return Err(Error::Graph("a subgraph sample needs at least one trajectory".into()));
    }
    let mut g = CollectiveGraph::new(settings.encoding);
    for t in trajectories {
        g.add_trajectory(t, settings, simulation)?;
    }
    Ok(g)
}

/// On-disk graph layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub format_version: u32,
    pub encoding: Encoding,
    pub nodes: Vec<NodeEntry>,
    pub edges: Vec<EdgeEntry>,
    pub trajectories: Vec<TrajectoryEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeEntry {
    pub key: String,
    pub tensor: Vec<f64>,
    pub visit_count: u64,
    pub label: Option<NodeLabel>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeEntry {
    pub src: String,
    pub dst: String,
    pub count: u64,
}

impl GraphFile {
    pub const FORMAT_VERSION: u32 = 1;
}

impl From<&CollectiveGraph> for GraphFile {
    fn from(g: &CollectiveGraph) -> Self {
        GraphFile {
            format_version: Self::FORMAT_VERSION,
            encoding: g.encoding,
            nodes: g
                .nodes
                .iter()
                .map(|(k, n)| NodeEntry {
                    key: k.clone(),
                    tensor: n.tensor.values.clone(),
                    visit_count: n.visit_count,
                    label: n.label,
                })
                .collect(),
            edges: g
                .edges
                .iter()
                .map(|((s, d), &c)| EdgeEntry { src: s.clone(), dst: d.clone(), count: c })
                .collect(),
            trajectories: g.trajectories.clone(),
        }
    }
}

impl TryFrom<GraphFile> for CollectiveGraph {
    type Error = Error;

    fn try_from(f: GraphFile) -> Result<Self> {
        if f.format_version != GraphFile::FORMAT_VERSION {
            return Err(Error::Graph(format!("unsupported graph format {}", f.format_version)));
        }
        let mut g = CollectiveGraph::new(f.encoding);
        for n in f.nodes {
            let tensor = StateTensor { encoding: f.encoding, values: n.tensor };
            if tensor_key(&tensor)? != n.key {
                return Err(Error::Graph(format!("node {} does not match its tensor", n.key)));
            }
            g.nodes.insert(n.key, Node { tensor, visit_count: n.visit_count, label: n.label });
        }
        for e in f.edges {
            if !g.nodes.contains_key(&e.src) || !g.nodes.contains_key(&e.dst) {
                return Err(Error::Graph("edge endpoint missing from node table".into()));
            }
            g.edges.insert((e.src, e.dst), e.count);
        }
        g.trajectories = f.trajectories;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abm::{Agent, AgentState, Point};

    fn sites() -> Vec<Site> {
        vec![Site { id: 0, position: Point::new(100.0, 0.0), quality: 0.8 }]
    }

    fn snap(states: &[AgentState]) -> Vec<Agent> {
        states
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let mut a = Agent::observer(i, Point::ORIGIN);
                a.state = s;
                if s.is_site_oriented() {
                    a.favored_site = Some(0);
                }
                a
            })
            .collect()
    }

    fn traj(snaps: Vec<Vec<Agent>>) -> Trajectory {
        Trajectory {
            condition_id: 0,
            seed: 0,
            sites: sites(),
            max_distance: 1000.0,
            snapshots: snaps,
            outcome: Outcome::TimedOut,
            ticks_elapsed: 0,
        }
    }

    use AgentState::*;

    #[test]
    fn constant_trajectory_is_one_node() {
        let t = traj(vec![snap(&[Observe, Observe]); 5]);
        let g = subgraph_sample(&[t], &CodecSettings::default(), 0).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (1, 0));
        assert_eq!(g.nodes().values().next().unwrap().visit_count, 1);
    }

    #[test]
    fn two_tick_transition_and_replay() {
        let t = traj(vec![snap(&[Observe, Observe]), snap(&[Observe, Explore])]);
        let mut g = CollectiveGraph::new(Encoding::Float);
        g.add_trajectory(&t, &CodecSettings::default(), 0).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
        assert_eq!(*g.edges().values().next().unwrap(), 1);
        g.add_trajectory(&t, &CodecSettings::default(), 1).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
        assert_eq!(*g.edges().values().next().unwrap(), 2);
    }

    #[test]
    fn probabilities_normalize() {
        let a = snap(&[Observe, Observe]);
        let b = snap(&[Observe, Explore]);
        let c = snap(&[Explore, Explore]);
        let mut g = CollectiveGraph::new(Encoding::Float);
        let s = CodecSettings::default();
        for _ in 0..3 {
            g.add_trajectory(&traj(vec![a.clone(), b.clone()]), &s, 0).unwrap();
        }
        g.add_trajectory(&traj(vec![a.clone(), c.clone()]), &s, 0).unwrap();
        let ka = tensor_key(&s.encode(&a, &sites(), 1000.0).unwrap()).unwrap();
        let kb = tensor_key(&s.encode(&b, &sites(), 1000.0).unwrap()).unwrap();
        let probs = g.edge_probabilities();
        let row = &probs[&ka];
        assert_eq!(row.len(), 2);
        let pb = row.iter().find(|(k, _)| *k == kb).unwrap().1;
        assert_eq!(pb, 0.75);
        assert!(probs[&kb].is_empty());
    }

    #[test]
    fn adjacency_is_symmetric() {
        let t = traj(vec![snap(&[Observe]), snap(&[Explore])]);
        let g = subgraph_sample(&[t], &CodecSettings::default(), 0).unwrap();
        let order = g.node_order();
        let a = g.adjacency_matrix(&order).unwrap();
        assert_eq!(a, ndarray::arr2(&[[0.0, 1.0], [1.0, 0.0]]));
        assert!(g.adjacency_matrix(&order[..1]).is_err());
        assert!(g.adjacency_matrix(&[order[0].clone(), "nope".into()]).is_err());
    }

    #[test]
    fn component_of_empty_graph_errors() {
        assert!(CollectiveGraph::new(Encoding::Float).largest_weakly_connected_component().is_err());
        assert!(subgraph_sample(&[], &CodecSettings::default(), 0).is_err());
        assert!(subgraph_sample(&[traj(vec![])], &CodecSettings::default(), 0).is_err());
    }

    #[test]
    fn file_round_trip() {
        let t = traj(vec![snap(&[Observe, Observe]), snap(&[Observe, Explore]), snap(&[Observe, TravelHubObserve])]);
        let g = subgraph_sample(&[t], &CodecSettings::default(), 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.json");
        g.save(&p).unwrap();
        assert_eq!(CollectiveGraph::load(&p).unwrap(), g);
    }
}
