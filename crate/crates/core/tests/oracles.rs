mod common;

use std::collections::BTreeSet;

use colonygraph::analysis::{aggregate_metrics, kmeans, label_nodes, success_probability, NodeLabel, RunMetrics};
use colonygraph::codec::CodecSettings;
use colonygraph::graph::{subgraph_sample, CollectiveGraph};

use common::*;

#[test]
fn merged_graph_equals_graph_of_all_trajectories() {
    let ts = trajectories(12, 1, 5, 1000);
    let settings = CodecSettings::default();
    let mut direct = CollectiveGraph::new(settings.encoding);
    for (i, t) in ts.iter().enumerate() {
        direct.add_trajectory(t, &settings, i as u64).unwrap();
    }
    let mut merged = CollectiveGraph::new(settings.encoding);
    for (i, t) in ts.iter().enumerate() {
        merged.merge(&subgraph_sample(std::slice::from_ref(t), &settings, i as u64).unwrap()).unwrap();
    }
    assert_eq!(direct.nodes(), merged.nodes());
    assert_eq!(direct.edges(), merged.edges());
    assert_eq!(direct, merged);
}

#[test]
fn merge_order_does_not_change_counts() {
    let ts = trajectories(6, 2, 5, 500);
    let settings = CodecSettings::default();
    let subs: Vec<_> = ts
        .iter()
        .enumerate()
        .map(|(i, t)| subgraph_sample(std::slice::from_ref(t), &settings, i as u64).unwrap())
        .collect();
    let mut fwd = CollectiveGraph::new(settings.encoding);
    let mut rev = CollectiveGraph::new(settings.encoding);
    for s in &subs {
        fwd.merge(s).unwrap();
    }
    for s in subs.iter().rev() {
        rev.merge(s).unwrap();
    }
    assert_eq!(fwd.nodes(), rev.nodes());
    assert_eq!(fwd.edges(), rev.edges());
}

#[test]
fn largest_component_matches_union_find() {
    for base in 0..4 {
        let ts = trajectories(10, 100 + base, 5, 300);
        let mut g = CollectiveGraph::new(CodecSettings::default().encoding);
        for (i, t) in ts.iter().enumerate() {
            g.add_trajectory(t, &CodecSettings::default(), i as u64).unwrap();
        }
        let c = g.largest_weakly_connected_component().unwrap();
        let got: BTreeSet<String> = c.nodes().keys().cloned().collect();
        assert_eq!(got, union_find_largest(&g));
        for (s, d) in c.edges().keys() {
            assert!(got.contains(s) && got.contains(d));
        }
    }
}

#[test]
fn kmeans_recovers_pairs_like_exhaustive_search() {
    let pts = paired_points();
    let (opt, parts) = exhaustive_kmeans(&pts, 4);
    let r = kmeans(&pts, 4, 0, 5).unwrap();
    assert!((r.inertia - opt).abs() < 1e-9, "{} vs {opt}", r.inertia);
    assert_eq!(partition(&r.labels, 4), parts);
    let pairs: BTreeSet<BTreeSet<usize>> = (0..4).map(|i| BTreeSet::from([2 * i, 2 * i + 1])).collect();
    assert_eq!(parts, pairs);
}

#[test]
fn kmeans_matches_exhaustive_on_random_small_sets() {
    use rand::Rng;
    let mut rng = colonygraph::rng::seeded(5);
    for _ in 0..5 {
        let pts: Vec<Vec<f64>> = (0..7).map(|_| vec![rng.random::<f64>() * 10.0, rng.random::<f64>() * 10.0]).collect();
        let (opt, _) = exhaustive_kmeans(&pts, 3);
        let r = kmeans(&pts, 3, 1, 20).unwrap();
        assert!(r.inertia >= opt - 1e-9);
        assert!(r.inertia <= opt * 1.0 + 1e-9, "{} vs {opt}", r.inertia);
    }
}

#[test]
fn success_probability_matches_counting_oracle() {
    let ts = trajectories(20, 7, 5, 2000);
    let settings = CodecSettings::default();
    let mut g = CollectiveGraph::new(settings.encoding);
    for (i, t) in ts.iter().enumerate() {
        g.add_trajectory(t, &settings, i as u64).unwrap();
    }
    let oracle = count_success(&ts, &settings);
    let stats = success_probability(&g);
    assert_eq!(stats.len(), oracle.len());
    for (k, s) in &stats {
        let (succ, any) = oracle[k];
        assert_eq!((s.on_success, s.on_any), (succ, any));
        assert_eq!(s.probability, succ as f64 / any as f64);
        assert_eq!(s.reliable, any as f64 >= 2.0);
    }
}

#[test]
fn labels_follow_terminal_and_hub_rules() {
    let ts = trajectories(20, 9, 5, 2000);
    let settings = CodecSettings::default();
    let mut g = CollectiveGraph::new(settings.encoding);
    for (i, t) in ts.iter().enumerate() {
        g.add_trajectory(t, &settings, i as u64).unwrap();
    }
    let labels = label_nodes(&g);
    assert_eq!(labels.len(), g.node_count());
    let terminal: BTreeSet<&String> =
        g.trajectories().iter().filter(|t| t.outcome.chosen().is_some()).filter_map(|t| t.keys.last()).collect();
    for (k, l) in &labels {
        let node = g.node(k).unwrap();
        match l {
            NodeLabel::Success | NodeLabel::Failure => assert!(terminal.contains(k)),
            NodeLabel::Hub => {
                assert!(!terminal.contains(k));
                assert_eq!(node.tensor.site_oriented_count(), 0);
            }
            NodeLabel::Intermediate => {
                assert!(!terminal.contains(k));
                assert!(node.tensor.site_oriented_count() > 0);
            }
        }
    }
}

#[test]
fn aggregate_quartiles_match_reference_percentiles() {
    // numpy.percentile([10, 20, 35, 50, 80], [25, 75]) -> [20, 50]
    let runs: Vec<RunMetrics> = [10u64, 20, 35, 50, 80]
        .iter()
        .map(|&t| RunMetrics {
            simulation: t,
            condition_id: 0,
            runtime: 1000,
            distance: 150.0,
            qualities: vec![0.9, 0.75],
            chosen: Some(0),
            success: Some(1.0),
            ticks: Some(t),
        })
        .collect();
    let rows = aggregate_metrics(&runs);
    assert_eq!(rows.len(), 1);
    let t = rows[0].ticks.unwrap();
    assert_eq!((t.mean, t.p25, t.p75), (39.0, 20.0, 50.0));
    assert_eq!(rows[0].bin, 1);
}
