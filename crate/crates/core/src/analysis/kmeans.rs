use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{derive_seed, seeded, SimRng};
use crate::{Error, Result};

const MAX_LLOYD: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after each assignment step of the winning restart.
    pub history: Vec<f64>,
    pub restart: usize,
}

fn sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Sum of squared distances from each point to its assigned centroid.
pub fn inertia<P: AsRef<[f64]>>(points: &[P], labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points.iter().zip(labels).map(|(p, &l)| sq(p.as_ref(), &centroids[l])).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq(p, centroid);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

fn plus_plus<P: AsRef<[f64]>>(points: &[P], k: usize, rng: &mut SimRng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.random_range(0..n)].as_ref().to_vec()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq(p.as_ref(), &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 && target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick].as_ref().to_vec();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq(p.as_ref(), &c));
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd<P: AsRef<[f64]>>(points: &[P], k: usize, seed: u64, restart: usize) -> KMeansResult {
    let mut rng = seeded(seed);
    let dim = points[0].as_ref().len();
    let mut centroids = plus_plus(points, k, &mut rng);
    let mut labels: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    for _ in 0..MAX_LLOYD {
        let next: Vec<usize> = points.iter().map(|p| nearest(p.as_ref(), &centroids)).collect();
        history.push(inertia(points, &next, &centroids));
        if next == labels {
            break;
        }
        labels = next;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p.as_ref()) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                centroids[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            // steal the point farthest from its centroid, from a cluster that can spare it
            let far = (0..points.len())
                .filter(|&i| counts[labels[i]] > 1)
                .max_by(|&a, &b| {
                    let da = sq(points[a].as_ref(), &centroids[labels[a]]);
                    let db = sq(points[b].as_ref(), &centroids[labels[b]]);
                    da.total_cmp(&db).then(b.cmp(&a))
                });
            if let Some(i) = far {
                counts[labels[i]] -= 1;
                counts[c] = 1;
                labels[i] = c;
                centroids[c] = points[i].as_ref().to_vec();
            }
        }
    }
    let inertia = inertia(points, &labels, &centroids);
    KMeansResult { labels, centroids, inertia, history, restart }
}

/// Lloyd's algorithm from k-means++ seeds, best of `restarts` runs. Restart
/// `r` is seeded from `(seed, r)`; equal inertia goes to the lower restart.
pub fn kmeans<P: AsRef<[f64]> + Sync>(points: &[P], k: usize, seed: u64, restarts: usize) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if k > points.len() {
        return Err(Error::Domain(format!("k = {k} exceeds {} points", points.len())));
    }
    let dim = points[0].as_ref().len();
    if points.iter().any(|p| p.as_ref().len() != dim) {
        return Err(Error::Shape("points differ in dimension".into()));
    }
    let runs: Vec<KMeansResult> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| lloyd(points, k, derive_seed(seed, &[r as u64]), r))
        .collect();
    Ok(runs
        .into_iter()
        .reduce(|best, r| if r.inertia < best.inertia { r } else { best })
        .expect("at least one restart"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cluster_is_the_mean() {
        let pts = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 3.0]];
        let r = kmeans(&pts, 1, 4, 3).unwrap();
        assert!((r.centroids[0][0] - 1.0).abs() < 1e-12);
        assert!((r.centroids[0][1] - 1.0).abs() < 1e-12);
        assert_eq!(r.labels, vec![0, 0, 0]);
    }

    #[test]
    fn identical_points_have_zero_inertia() {
        let pts = vec![vec![1.5, -2.0]; 6];
        let r = kmeans(&pts, 2, 0, 2).unwrap();
        assert_eq!(r.inertia, 0.0);
        assert!(r.labels.iter().all(|&l| l < 2));
    }

    #[test]
    fn bad_k() {
        let pts = vec![vec![0.0]; 3];
        assert!(kmeans(&pts, 0, 0, 1).is_err());
        assert!(kmeans(&pts, 4, 0, 1).is_err());
    }

    #[test]
    fn history_never_increases() {
        let mut rng = seeded(12);
        let pts: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let r = kmeans(&pts, 6, 3, 4).unwrap();
        for w in r.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9);
        }
        assert_eq!(r, kmeans(&pts, 6, 3, 4).unwrap());
    }
}
