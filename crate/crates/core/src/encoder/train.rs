use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::{loss_and_grad, sigmoid, PairTargets};
use super::{EncoderModel, GraphInput};
use crate::graph::CollectiveGraph;
use crate::rng::seeded;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Global gradient-norm clip.
    pub clip_norm: f64,
    /// Fraction of each subgraph's edges held out for link-prediction scoring.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            epochs: 200,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: 5.0,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || self.epochs == 0 {
            return Err(Error::Config("learning rate must be >= 0 and epochs >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config("validation_fraction must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// One subgraph prepared for training. Pairs in `excluded` (held-out edges
/// and non-edges) are left out of the loss.
#[derive(Debug, Clone)]
pub struct TrainSample {
    pub input: GraphInput,
    pub excluded: HashSet<(usize, usize)>,
}

impl TrainSample {
    pub fn full(input: GraphInput) -> Self {
        TrainSample { input, excluded: HashSet::new() }
    }

    fn targets(&self) -> PairTargets<'_> {
        PairTargets { input: &self.input, excluded: Some(&self.excluded) }
    }
}

/// Held-out node pairs, `(i, j)` with `i < j`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HeldOut {
    pub positives: Vec<(usize, usize)>,
    pub negatives: Vec<(usize, usize)>,
}

/// Removes a `fraction` of the undirected edges from message passing and from
/// the loss, pairing them with as many sampled non-edges.
pub fn split_edges<R: Rng + ?Sized>(input: &GraphInput, fraction: f64, rng: &mut R) -> (TrainSample, HeldOut) {
    let n = input.len();
    let mut edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| input.neighbors[i].iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
        .collect();
    let take = (fraction * edges.len() as f64).round() as usize;
    let non_edges = n * n.saturating_sub(1) / 2 - edges.len();
    let take = take.min(non_edges);
    if take == 0 {
        return (TrainSample::full(input.clone()), HeldOut::default());
    }
    edges.shuffle(rng);
    let positives: Vec<(usize, usize)> = edges[..take].to_vec();
    let mut negatives = Vec::with_capacity(take);
    let mut chosen = HashSet::new();
    while negatives.len() < take {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        let pair = (i.min(j), i.max(j));
        if i != j && !input.is_edge(i, j) && chosen.insert(pair) {
            negatives.push(pair);
        }
    }
    let mut neighbors = input.neighbors.clone();
    for &(i, j) in &positives {
        neighbors[i].retain(|&u| u != j);
        neighbors[j].retain(|&u| u != i);
    }
    let train_input = GraphInput { features: input.features.clone(), neighbors };
    let excluded = positives.iter().chain(&negatives).copied().collect();
    (TrainSample { input: train_input, excluded }, HeldOut { positives, negatives })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean loss over the samples before any update.
    pub initial_loss: f64,
    /// Mean per-sample loss of each epoch.
    pub history: Vec<f64>,
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    t: i32,
}

impl Adam {
    fn new(model: &EncoderModel) -> Self {
        let zeros: Vec<Vec<f64>> = model.params().iter().map(|p| vec![0.0; p.len()]).collect();
        Adam { m: zeros.clone(), v: zeros, t: 0 }
    }

    fn step(&mut self, model: &mut EncoderModel, grads: &EncoderModel, cfg: &TrainConfig) {
        self.t += 1;
        let norm: f64 = grads.params().iter().flat_map(|p| p.iter()).map(|g| g * g).sum::<f64>().sqrt();
        let clip = if norm > cfg.clip_norm { cfg.clip_norm / norm } else { 1.0 };
        let bc1 = 1.0 - cfg.beta1.powi(self.t);
        let bc2 = 1.0 - cfg.beta2.powi(self.t);
        for (b, (param, grad)) in model.params_mut().into_iter().zip(grads.params()).enumerate() {
            for (i, (w, &g)) in param.iter_mut().zip(grad).enumerate() {
                let g = g * clip;
                let m = &mut self.m[b][i];
                let v = &mut self.v[b][i];
                *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
                *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
                *w -= cfg.learning_rate * (*m / bc1) / ((*v / bc2).sqrt() + cfg.epsilon);
            }
        }
    }
}

fn sample_loss(model: &EncoderModel, s: &TrainSample) -> Result<f64> {
    Ok(loss_and_grad(&model.forward(&s.input)?, s.targets())?.0)
}

/// Full-batch Adam over each subgraph in turn, `epochs` times. Subgraph order
/// is reshuffled every epoch from `config.seed`.
pub fn train(model: &mut EncoderModel, samples: &[TrainSample], config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::Config("no subgraph samples".into()));
    }
    if let Some(s) = samples.iter().find(|s| s.input.len() < 2) {
        return Err(Error::Config(format!("subgraph with {} node(s); at least 2 required", s.input.len())));
    }
    let initial_loss = samples.iter().map(|s| sample_loss(model, s)).sum::<Result<f64>>()? / samples.len() as f64;
    let mut rng = seeded(config.seed);
    let mut adam = Adam::new(model);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &k in &order {
            let s = &samples[k];
            let (out, cache) = model.forward_cached(&s.input)?;
            let (loss, d_out) = loss_and_grad(&out, s.targets())?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            total += loss;
            let grads = model.backward(&s.input, &cache, &d_out);
            adam.step(model, &grads, config);
        }
        let mean = total / samples.len() as f64;
        if !mean.is_finite() || model.params().iter().any(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::Diverged { epoch });
        }
        history.push(mean);
    }
    Ok(TrainReport { initial_loss, history })
}

/// Edge scores of held-out positives and negatives under `sample`'s training
/// adjacency.
pub fn holdout_scores(model: &EncoderModel, sample: &TrainSample, held: &HeldOut) -> Result<(Vec<f64>, Vec<f64>)> {
    let emb = model.forward(&sample.input)?;
    let score = |&(i, j): &(usize, usize)| sigmoid(emb.row(i).dot(&emb.row(j)));
    Ok((held.positives.iter().map(score).collect(), held.negatives.iter().map(score).collect()))
}

/// Area under the ROC curve: probability that a positive outscores a
/// negative, ties counting one half.
pub fn roc_auc(positives: &[f64], negatives: &[f64]) -> Option<f64> {
    if positives.is_empty() || negatives.is_empty() {
        return None;
    }
    let mut all: Vec<(f64, bool)> = positives
        .iter()
        .map(|&s| (s, true))
        .chain(negatives.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // average ranks over tie groups
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        rank_sum += all[i..j].iter().filter(|x| x.1).count() as f64 * avg;
        i = j;
    }
    let np = positives.len() as f64;
    let nn = negatives.len() as f64;
    Some((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// One forward pass over the whole graph.
pub fn embed_graph(model: &EncoderModel, graph: &CollectiveGraph) -> Result<BTreeMap<String, [f64; 3]>> {
    let (order, input) = GraphInput::from_graph(graph)?;
    let emb = model.forward(&input)?;
    Ok(order
        .into_iter()
        .zip(emb.rows())
        .map(|(k, r)| (k, [r[0], r[1], r[2]]))
        .collect())
}
