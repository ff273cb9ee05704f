//! Post-hoc analyses of trials and of the collective-state graph.

mod kmeans;
mod metrics;
mod tsne;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

pub use kmeans::{inertia, kmeans, KMeansResult};
pub use metrics::{
    aggregate_metrics, percentile, quality_bin, success_metric, AggregateRow, RunMetrics, Spread, BIN_COUNT,
    BIN_WIDTH,
};
pub use tsne::{conditional_affinities, joint_affinities, tsne_2d, TsneConfig};

use crate::graph::CollectiveGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeLabel {
    Success,
    Failure,
    Hub,
    Intermediate,
}

impl NodeLabel {
    pub fn name(self) -> &'static str {
        match self {
            NodeLabel::Success => "Success",
            NodeLabel::Failure => "Failure",
            NodeLabel::Hub => "Hub",
            NodeLabel::Intermediate => "Intermediate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessStats {
    pub on_success: u64,
    pub on_any: u64,
    pub probability: f64,
    /// Visited by at least a tenth of all trajectories.
    pub reliable: bool,
}

/// For every visited node, the share of trajectories through it that ended on
/// a best site. A trajectory counts once per node however often it passes.
pub fn success_probability(graph: &CollectiveGraph) -> BTreeMap<String, SuccessStats> {
    let mut counts: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    let total = graph.trajectories().len();
    for t in graph.trajectories() {
        let ok = t.succeeded();
        let distinct: HashSet<&str> = t.keys.iter().map(String::as_str).collect();
        for k in distinct {
            let c = counts.entry(k).or_default();
            c.1 += 1;
            if ok {
                c.0 += 1;
            }
        }
    }
    counts
        .into_iter()
        .map(|(k, (s, a))| {
            let stats = SuccessStats {
                on_success: s,
                on_any: a,
                probability: s as f64 / a as f64,
                reliable: a as f64 >= 0.1 * total as f64,
            };
            (k.to_string(), stats)
        })
        .collect()
}

/// Labels every node. The final state of a converged trial is Success when
/// the chosen site is a best one and Failure otherwise; a terminal node
/// reached both ways takes the majority, ties going to Success. Remaining
/// nodes with no site-oriented agent are Hub, the rest Intermediate.
pub fn label_nodes(graph: &CollectiveGraph) -> BTreeMap<String, NodeLabel> {
    let mut votes: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for t in graph.trajectories() {
        if t.outcome.chosen().is_none() {
            continue;
        }
        if let Some(last) = t.keys.last() {
            let v = votes.entry(last).or_default();
            if t.succeeded() {
                v.0 += 1;
            } else {
                v.1 += 1;
            }
        }
    }
    graph
        .nodes()
        .iter()
        .map(|(k, node)| {
            let label = match votes.get(k.as_str()) {
                Some(&(s, f)) if s >= f => NodeLabel::Success,
                Some(_) => NodeLabel::Failure,
                None if node.tensor.site_oriented_count() == 0 => NodeLabel::Hub,
                None => NodeLabel::Intermediate,
            };
            (k.clone(), label)
        })
        .collect()
}

/// Stores `label_nodes` results on the graph.
pub fn apply_labels(graph: &mut CollectiveGraph) -> BTreeMap<String, NodeLabel> {
    let labels = label_nodes(graph);
    for (k, &l) in &labels {
        graph.set_label(k, l);
    }
    labels
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Mean over points of the fraction of their `k` nearest neighbours (self
/// excluded, distance ties broken by index) that share their label.
pub fn knn_label_agreement<P: AsRef<[f64]>, L: PartialEq>(points: &[P], labels: &[L], k: usize) -> Option<f64> {
    let n = points.len();
    if n < 2 || k == 0 || labels.len() != n {
        return None;
    }
    let k = k.min(n - 1);
    let mut total = 0.0;
    for i in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (sq_dist(points[i].as_ref(), points[j].as_ref()), j))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let same = others[..k].iter().filter(|&&(_, j)| labels[j] == labels[i]).count();
        total += same as f64 / k as f64;
    }
    Some(total / n as f64)
}

/// Share of the most common label, the agreement a label-blind neighbour
/// choice would reach on average.
pub fn majority_share<L: Ord>(labels: &[L]) -> Option<f64> {
    if labels.is_empty() {
        return None;
    }
    let mut counts: BTreeMap<&L, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    counts.values().max().map(|&m| m as f64 / labels.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knn_on_separated_groups() {
        let pts = vec![[0.0, 0.0], [0.1, 0.0], [0.0, 0.1], [5.0, 5.0], [5.1, 5.0], [5.0, 5.1]];
        let labels = [0, 0, 0, 1, 1, 1];
        assert_eq!(knn_label_agreement(&pts, &labels, 2), Some(1.0));
        let mixed = [0, 1, 0, 1, 0, 1];
        assert!(knn_label_agreement(&pts, &mixed, 2).unwrap() < 0.5);
        assert_eq!(majority_share(&[1, 1, 2]), Some(2.0 / 3.0));
    }
}
