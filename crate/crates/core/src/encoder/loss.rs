use std::collections::HashSet;

use ndarray::{Array2, ArrayView1};

use super::GraphInput;
use crate::{Error, Result};

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `sigmoid(x . y)`.
pub fn edge_score(x: &[f64], y: &[f64]) -> f64 {
    sigmoid(x.iter().zip(y).map(|(a, b)| a * b).sum())
}

/// Binary cross-entropy of `sigmoid(logit)` against `target`, evaluated
/// without forming the sigmoid.
pub fn bce_with_logits(logit: f64, target: f64) -> f64 {
    logit.max(0.0) - logit * target + (-logit.abs()).exp().ln_1p()
}

/// Which node pairs are edges and which pairs are left out of the loss.
#[derive(Debug, Clone, Copy)]
pub struct PairTargets<'a> {
    pub input: &'a GraphInput,
    pub excluded: Option<&'a HashSet<(usize, usize)>>,
}

impl<'a> PairTargets<'a> {
    pub fn all(input: &'a GraphInput) -> Self {
        PairTargets { input, excluded: None }
    }

    fn skip(&self, i: usize, j: usize) -> bool {
        self.excluded.is_some_and(|e| e.contains(&(i, j)))
    }
}

fn dot(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.dot(&b)
}

/// Mean BCE over unordered off-diagonal pairs and its gradient with respect
/// to the embeddings.
pub(crate) fn loss_and_grad(emb: &Array2<f64>, targets: PairTargets<'_>) -> Result<(f64, Array2<f64>)> {
    let n = emb.nrows();
    if n != targets.input.len() {
        return Err(Error::Shape(format!("{n} embeddings for {} nodes", targets.input.len())));
    }
    if emb.iter().any(|x| x.is_nan()) {
        return Err(Error::Shape("embeddings contain NaN".into()));
    }
    let mut coeff = Array2::<f64>::zeros((n, n));
    let mut total = 0.0;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if targets.skip(i, j) {
                continue;
            }
            let t = if targets.input.is_edge(i, j) { 1.0 } else { 0.0 };
            let logit = dot(emb.row(i), emb.row(j));
            total += bce_with_logits(logit, t);
            let g = sigmoid(logit) - t;
            coeff[[i, j]] = g;
            coeff[[j, i]] = g;
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(Error::Shape("no node pairs to score".into()));
    }
    let scale = 1.0 / pairs as f64;
    let grad = coeff.dot(emb) * scale;
    Ok((total * scale, grad))
}

/// Mean BCE-with-logits of `x_i . x_j` against a dense 0/1 adjacency.
pub fn reconstruction_loss(embeddings: &Array2<f64>, adjacency: &Array2<f64>) -> Result<f64> {
    let input = GraphInput::from_dense(Array2::zeros((embeddings.nrows(), 0)), adjacency)?;
    Ok(loss_and_grad(embeddings, PairTargets::all(&input))?.0)
}
