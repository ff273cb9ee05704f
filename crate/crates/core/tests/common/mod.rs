//! Fixtures and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use colonygraph::abm::{
    make_initial_condition, place_sites, run_simulation, sample_qualities, InitialCondition, Trajectory,
    TransitionParams, WorldConfig,
};
use colonygraph::codec::{tensor_key, CodecSettings};
use colonygraph::graph::CollectiveGraph;
use colonygraph::rng::{derive_seed, seeded};

/// `n` short sweep-parameter trials with K agents, two sites at distance 100,
/// cycling through the three seed configurations.
pub fn trajectories(n: usize, base: u64, agents: usize, runtime: u64) -> Vec<Trajectory> {
    let params = TransitionParams::table2();
    (0..n)
        .map(|i| {
            let seed = derive_seed(base, &[i as u64]);
            let mut rng = seeded(seed);
            let qualities = sample_qualities(2, 0.5, 0.5, &mut rng).unwrap();
            let sites = place_sites(&qualities, 100.0, &mut rng);
            let world = WorldConfig::new(1000.0, sites, agents, 0.5, runtime, seed);
            let kind = InitialCondition::SEEDS[i % 3];
            let start = make_initial_condition(kind, &world, &params, &mut rng).unwrap();
            run_simulation(&world, &params, &start, seed).unwrap().with_condition(i % 3)
        })
        .collect()
}

/// Node set of the largest weakly connected component by union-find, ties
/// going to the component with the smallest key.
pub fn union_find_largest(graph: &CollectiveGraph) -> BTreeSet<String> {
    let keys: Vec<&String> = graph.nodes().keys().collect();
    let index: BTreeMap<&String, usize> = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let mut parent: Vec<usize> = (0..keys.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (s, d) in graph.edges().keys() {
        let a = find(&mut parent, index[s]);
        let b = find(&mut parent, index[d]);
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for (i, k) in keys.iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().insert((*k).clone());
    }
    groups
        .into_values()
        .max_by(|a, b| a.len().cmp(&b.len()).then_with(|| b.first().cmp(&a.first())))
        .unwrap_or_default()
}

/// Minimum inertia over every assignment of points to `k` non-empty
/// clusters, with the optimal partition as sets of point indices.
pub fn exhaustive_kmeans(points: &[Vec<f64>], k: usize) -> (f64, BTreeSet<BTreeSet<usize>>) {
    let n = points.len();
    let dim = points[0].len();
    let mut best = (f64::INFINITY, BTreeSet::new());
    let mut labels = vec![0usize; n];
    let total = k.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        for l in labels.iter_mut() {
            *l = c % k;
            c /= k;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for d in 0..dim {
                sums[l][d] += p[d];
            }
        }
        if counts.contains(&0) {
            continue;
        }
        let inertia: f64 = points
            .iter()
            .zip(&labels)
            .map(|(p, &l)| (0..dim).map(|d| (p[d] - sums[l][d] / counts[l] as f64).powi(2)).sum::<f64>())
            .sum();
        if inertia < best.0 - 1e-12 {
            best = (inertia, partition(&labels, k));
        }
    }
    best
}

pub fn partition(labels: &[usize], k: usize) -> BTreeSet<BTreeSet<usize>> {
    (0..k)
        .map(|c| labels.iter().enumerate().filter(|(_, &l)| l == c).map(|(i, _)| i).collect::<BTreeSet<_>>())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Eight points forming four tight, well-separated pairs.
pub fn paired_points() -> Vec<Vec<f64>> {
    vec![
        vec![0.0, 0.0],
        vec![0.3, 0.1],
        vec![10.0, 0.0],
        vec![10.2, 0.3],
        vec![0.0, 10.0],
        vec![-0.1, 10.3],
        vec![10.0, 10.0],
        vec![10.3, 9.8],
    ]
}

/// Per tensor key: (successful trajectories through it, all trajectories
/// through it), counted straight from the raw snapshots.
pub fn count_success(trajectories: &[Trajectory], settings: &CodecSettings) -> BTreeMap<String, (u64, u64)> {
    let mut out: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for t in trajectories {
        let best = t.sites.iter().map(|s| s.quality).fold(f64::MIN, f64::max);
        let ok = t.chosen_quality() == Some(best);
        let keys: HashSet<String> = t
            .snapshots
            .iter()
            .map(|s| tensor_key(&settings.encode(s, &t.sites, t.max_distance).unwrap()).unwrap())
            .collect();
        for k in keys {
            let e = out.entry(k).or_default();
            e.1 += 1;
            e.0 += ok as u64;
        }
    }
    out
}
