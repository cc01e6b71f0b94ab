//! Spectral clustering on the shape interaction matrix and clustering
//! accuracy.

use faer::{Mat, MatRef};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LrrError, Result};
use crate::linalg::{self, DenseMatrix};

/// Number of k-means restarts; the lowest inertia wins.
pub const KMEANS_RESTARTS: usize = 20;
const KMEANS_MAX_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub labels: Vec<usize>,
    pub k: usize,
}

/// `W = |UUᵀ|`, symmetrized to absorb rounding.
pub fn sim_affinity(u_star: MatRef<'_, f64>) -> DenseMatrix {
    let p = u_star * u_star.transpose();
    let abs = Mat::from_fn(p.nrows(), p.ncols(), |i, j| p[(i, j)].abs());
    linalg::symmetrize(abs.as_ref())
}

/// Normalized-affinity spectral embedding followed by seeded k-means.
pub fn spectral_cluster(w: MatRef<'_, f64>, k: usize, seed: u64) -> Result<Clustering> {
    let n = w.nrows();
    if w.ncols() != n {
        return Err(LrrError::mismatch("spectral_cluster: affinity", n, w.ncols()));
    }
    linalg::ensure_finite(w)?;
    if k == 0 || k > n {
        return Err(LrrError::InvalidInput(format!("cluster count {k} not in 1..={n}")));
    }
    if k == 1 {
        return Ok(Clustering { labels: vec![0; n], k });
    }
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let deg: f64 = w.row(i).iter().sum();
            if deg > 0.0 {
                1.0 / deg.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let normalized = Mat::from_fn(n, n, |i, j| inv_sqrt[i] * w[(i, j)] * inv_sqrt[j]);
    let (_, vecs) = linalg::symmetric_eigen(linalg::symmetrize(normalized.as_ref()).as_ref())?;
    let mut embed: Vec<Vec<f64>> = (0..n).map(|i| (0..k).map(|j| vecs[(i, j)]).collect()).collect();
    for row in &mut embed {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
    Ok(Clustering { labels: kmeans(&embed, k, seed), k })
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd iterations from k-means++ seeds, `KMEANS_RESTARTS` times.
fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let (inertia, labels) = lloyd(points, plus_plus(points, k, &mut rng), k);
        if best.as_ref().is_none_or(|(b, _)| inertia < *b) {
            best = Some((inertia, labels));
        }
    }
    best.map(|(_, l)| l).unwrap_or_default()
}

fn plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    idx = i;
                    break;
                }
                target -= d;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[pick].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &centers[centers.len() - 1]));
        }
    }
    centers
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>, k: usize) -> (f64, Vec<usize>) {
    let dim = points[0].len();
    let mut labels = vec![usize::MAX; points.len()];
    for _ in 0..KMEANS_MAX_ITERS {
        let mut changed = false;
        for (p, l) in points.iter().zip(labels.iter_mut()) {
            let nearest = (0..k)
                .map(|c| (c, sq_dist(p, &centers[c])))
                .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc })
                .0;
            if *l != nearest {
                *l = nearest;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            sums[l].iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        for c in 0..k {
            // Empty clusters keep their previous center.
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    let inertia = points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centers[l])).sum();
    (inertia, labels)
}

/// Fraction of samples whose cluster's majority class matches their own
/// class. Ties go to the smallest class index; several clusters may share a
/// class.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(LrrError::mismatch("accuracy", truth.len(), pred.len()));
    }
    if pred.is_empty() {
        return Err(LrrError::InvalidInput("accuracy of an empty labeling".into()));
    }
    let clusters = pred.iter().max().map_or(0, |m| m + 1);
    let classes = truth.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![vec![0usize; classes]; clusters];
    for (&p, &t) in pred.iter().zip(truth) {
        counts[p][t] += 1;
    }
    let correct: usize = counts
        .iter()
        .map(|row| row.iter().fold(0, |best, &c| best.max(c)))
        .sum();
    Ok(correct as f64 / pred.len() as f64)
}

/// Majority class of every cluster index in `0..k`, `None` for empty
/// clusters.
pub fn cluster_classes(pred: &[usize], truth: &[usize], k: usize) -> Vec<Option<usize>> {
    let classes = truth.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![vec![0usize; classes]; k];
    for (&p, &t) in pred.iter().zip(truth) {
        if p < k {
            counts[p][t] += 1;
        }
    }
    counts
        .iter()
        .map(|row| {
            let mut best: Option<(usize, usize)> = None;
            for (c, &n) in row.iter().enumerate() {
                if n > 0 && best.is_none_or(|(_, b)| n > b) {
                    best = Some((c, n));
                }
            }
            best.map(|(c, _)| c)
        })
        .collect()
}
