use ndarray::Array2;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::rng::seeded;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 15.0,
            iterations: 1000,
            learning_rate: 200.0,
            exaggeration: 12.0,
            exaggeration_iters: 250,
            seed: 0,
        }
    }
}

const ENTROPY_TOL: f64 = 1e-5;
const MAX_BISECTIONS: usize = 50;

fn squared_distances<P: AsRef<[f64]>>(points: &[P]) -> Result<Array2<f64>> {
    let n = points.len();
    let dim = points.first().map_or(0, |p| p.as_ref().len());
    if points.iter().any(|p| p.as_ref().len() != dim) {
        return Err(Error::Shape("points differ in dimension".into()));
    }
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = points[i].as_ref().iter().zip(points[j].as_ref()).map(|(a, b)| (a - b) * (a - b)).sum();
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    Ok(d)
}

/// Row `i` holds `p(j|i)` with the Gaussian precision found by bisection so
/// the row's perplexity (`exp` of its entropy in nats) hits `perplexity`.
pub fn conditional_affinities<P: AsRef<[f64]>>(points: &[P], perplexity: f64) -> Result<Array2<f64>> {
    let n = points.len();
    if n < 2 || !(perplexity > 1.0) {
        return Err(Error::Domain(format!("cannot calibrate {n} points to perplexity {perplexity}")));
    }
    let dist = squared_distances(points)?;
    let target = perplexity.ln();
    let mut p = Array2::zeros((n, n));
    let mut row = vec![0.0; n];
    for i in 0..n {
        // shifting distances by the row minimum leaves p(j|i) unchanged
        let min = (0..n).filter(|&j| j != i).map(|j| dist[[i, j]]).fold(f64::INFINITY, f64::min);
        let (mut beta, mut lo, mut hi) = (1.0, 0.0, f64::INFINITY);
        for _ in 0..MAX_BISECTIONS {
            let mut sum = 0.0;
            let mut weighted = 0.0;
            for j in 0..n {
                let d = dist[[i, j]] - min;
                row[j] = if j == i { 0.0 } else { (-beta * d).exp() };
                sum += row[j];
                weighted += d * row[j];
            }
            let entropy = sum.ln() + beta * weighted / sum;
            for v in row.iter_mut() {
                *v /= sum;
            }
            let diff = entropy - target;
            if diff.abs() < ENTROPY_TOL {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
        }
        for j in 0..n {
            p[[i, j]] = row[j];
        }
    }
    Ok(p)
}

/// Symmetrized joint affinities `(P + Pᵀ) / 2n`; sums to one.
pub fn joint_affinities<P: AsRef<[f64]>>(points: &[P], perplexity: f64) -> Result<Array2<f64>> {
    let cond = conditional_affinities(points, perplexity)?;
    let n = points.len() as f64;
    Ok((&cond + &cond.t()) / (2.0 * n))
}

fn gaussian_init(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = seeded(seed);
    (0..n)
        .map(|_| {
            let x: f64 = StandardNormal.sample(&mut rng);
            let y: f64 = StandardNormal.sample(&mut rng);
            [x * 1e-4, y * 1e-4]
        })
        .collect()
}

/// Exact t-SNE to two dimensions.
pub fn tsne_2d<P: AsRef<[f64]>>(points: &[P], config: &TsneConfig) -> Result<Vec<[f64; 2]>> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Domain(format!("t-SNE needs at least 3 points, got {n}")));
    }
    if !(config.perplexity < (n - 1) as f64 / 3.0) {
        return Err(Error::Domain(format!(
            "perplexity {} must be below (n - 1) / 3 = {:.3}",
            config.perplexity,
            (n - 1) as f64 / 3.0
        )));
    }
    let mut y = gaussian_init(n, config.seed);
    let first = points[0].as_ref();
    if points.iter().all(|p| p.as_ref() == first) {
        log::warn!("all {n} t-SNE inputs are identical; returning the seeded initial layout");
        return Ok(y);
    }
    let p = joint_affinities(points, config.perplexity)?.mapv(|v| v.max(1e-12));

    let mut update = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut num = Array2::<f64>::zeros((n, n));
    let mut grad = vec![[0.0; 2]; n];
    for iter in 0..config.iterations {
        let exaggerate = iter < config.exaggeration_iters;
        let scale = if exaggerate { config.exaggeration } else { 1.0 };
        let momentum = if iter < 250 { 0.5 } else { 0.8 };

        let mut total = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                let v = 1.0 / (1.0 + dx * dx + dy * dy);
                num[[i, j]] = v;
                num[[j, i]] = v;
                total += 2.0 * v;
            }
        }
        for i in 0..n {
            let mut g = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let q = (num[[i, j]] / total).max(1e-12);
                let m = (scale * p[[i, j]] - q) * num[[i, j]];
                g[0] += m * (y[i][0] - y[j][0]);
                g[1] += m * (y[i][1] - y[j][1]);
            }
            grad[i] = [4.0 * g[0], 4.0 * g[1]];
        }
        for i in 0..n {
            for d in 0..2 {
                let same_sign = (grad[i][d] > 0.0) == (update[i][d] > 0.0);
                gains[i][d] = if same_sign { gains[i][d] * 0.8 } else { gains[i][d] + 0.2 };
                gains[i][d] = gains[i][d].max(0.01);
                update[i][d] = momentum * update[i][d] - config.learning_rate * gains[i][d] * grad[i][d];
                y[i][d] += update[i][d];
            }
        }
        let cx = y.iter().map(|v| v[0]).sum::<f64>() / n as f64;
        let cy = y.iter().map(|v| v[1]).sum::<f64>() / n as f64;
        for v in &mut y {
            v[0] -= cx;
            v[1] -= cy;
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![i as f64, (i * i) as f64 * 0.1]).collect()
    }

    #[test]
    fn conditional_rows_hit_perplexity() {
        let pts = line(25);
        let p = conditional_affinities(&pts, 5.0).unwrap();
        for row in p.rows() {
            assert!((row.sum() - 1.0).abs() < 1e-12);
            let h: f64 = -row.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>();
            assert!((h.exp() - 5.0).abs() < 1e-3, "{}", h.exp());
        }
    }

    #[test]
    fn joint_is_symmetric_distribution() {
        let p = joint_affinities(&line(12), 3.0).unwrap();
        assert!((p.sum() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&v| v >= 0.0));
        assert_eq!(p, p.t());
    }

    #[test]
    fn preconditions() {
        let cfg = TsneConfig { perplexity: 5.0, ..TsneConfig::default() };
        assert!(tsne_2d(&line(2), &cfg).is_err());
        assert!(tsne_2d(&line(16), &cfg).is_err());
    }

    #[test]
    fn identical_points_give_jitter() {
        let pts = vec![vec![1.0, 1.0]; 10];
        let cfg = TsneConfig { perplexity: 2.0, iterations: 10, ..TsneConfig::default() };
        let y = tsne_2d(&pts, &cfg).unwrap();
        assert_eq!(y.len(), 10);
        assert!(y.iter().all(|v| v[0].abs() < 1e-2 && v[1].abs() < 1e-2));
        assert_eq!(y, tsne_2d(&pts, &cfg).unwrap());
    }
}
