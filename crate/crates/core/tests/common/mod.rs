//! Reference implementations used as oracles by the integration tests. They
//! follow the textbook definitions directly and share no code with the crate.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>())
}

fn row_dist(p: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    (p.row(i) - p.row(j)).norm()
}

/// Agglomerative Ward clustering that recomputes every inter-cluster
/// distance from the member points at each step. Returns the merged member
/// sets (sorted) and heights in merge order.
pub fn naive_ward(points: &DMatrix<f64>) -> Vec<(Vec<usize>, f64)> {
    let mut clusters: Vec<Vec<usize>> = (0..points.nrows()).map(|i| vec![i]).collect();
    let centroid = |members: &[usize]| -> DVector<f64> {
        let mut c = DVector::zeros(points.ncols());
        for &m in members {
            c += points.row(m).transpose();
        }
        c / members.len() as f64
    };
    let mut merges = Vec::new();
    while clusters.len() > 1 {
        let mut best = (0, 1, f64::INFINITY);
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let (na, nb) = (clusters[a].len() as f64, clusters[b].len() as f64);
                let gap = (centroid(&clusters[a]) - centroid(&clusters[b])).norm();
                let h = (2.0 * na * nb / (na + nb)).sqrt() * gap;
                if h < best.2 {
                    best = (a, b, h);
                }
            }
        }
        let (a, b, h) = best;
        let removed = clusters.remove(b);
        clusters[a].extend(removed);
        clusters[a].sort_unstable();
        merges.push((clusters[a].clone(), h));
    }
    merges
}

/// Mean silhouette straight from the definition; singletons score 0.
pub fn naive_silhouette(points: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let n = labels.len();
    let k = labels.iter().max().unwrap() + 1;
    let mut total = 0.0;
    for i in 0..n {
        let own: Vec<usize> = (0..n).filter(|&j| j != i && labels[j] == labels[i]).collect();
        if own.is_empty() {
            continue;
        }
        let a = own.iter().map(|&j| row_dist(points, i, j)).sum::<f64>() / own.len() as f64;
        let mut b = f64::INFINITY;
        for c in 0..k {
            if c == labels[i] {
                continue;
            }
            let other: Vec<usize> = (0..n).filter(|&j| labels[j] == c).collect();
            if other.is_empty() {
                continue;
            }
            let mean = other.iter().map(|&j| row_dist(points, i, j)).sum::<f64>() / other.len() as f64;
            b = b.min(mean);
        }
        total += (b - a) / a.max(b);
    }
    total / n as f64
}

/// Gradient of `‖F V Aᵀ − Y‖² + γ‖V Aᵀ‖² + λ‖F V‖² + γλ‖V‖²`, one term at
/// a time.
pub fn eszsl_gradient(
    f: &DMatrix<f64>,
    y: &DMatrix<f64>,
    a: &DMatrix<f64>,
    v: &DMatrix<f64>,
    gamma: f64,
    lambda: f64,
) -> DMatrix<f64> {
    let residual = f * v * a.transpose() - y;
    let data = f.transpose() * &residual * a * 2.0;
    let reg_gamma = v * a.transpose() * a * (2.0 * gamma);
    let reg_lambda = f.transpose() * f * v * (2.0 * lambda);
    let reg_both = v * (2.0 * gamma * lambda);
    data + reg_gamma + reg_lambda + reg_both
}

/// Mean softmax cross-entropy of a linear head `W x + b`.
pub fn cross_entropy(w: &DMatrix<f64>, b: &DVector<f64>, x: &DMatrix<f64>, targets: &[usize]) -> f64 {
    let mut total = 0.0;
    for (r, &t) in targets.iter().enumerate() {
        let z: Vec<f64> = (0..w.nrows()).map(|c| w.row(c).dot(&x.row(r)) + b[c]).collect();
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        total += lse - z[t];
    }
    total / targets.len() as f64
}

/// Index of the largest score, lowest index on ties.
pub fn first_argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// `k` distinct elements of `pool`, sorted.
pub fn random_subset(rng: &mut ChaCha8Rng, pool: &[usize], k: usize) -> Vec<usize> {
    let mut s: Vec<usize> = pool.choose_multiple(rng, k).copied().collect();
    s.sort_unstable();
    s
}

/// One-sided sign test: probability of at least `wins` successes out of
/// `wins + losses` fair coin flips.
pub fn sign_test_p(wins: usize, losses: usize) -> f64 {
    use statrs::distribution::{Binomial, DiscreteCDF};
    let n = (wins + losses) as u64;
    if n == 0 {
        return 1.0;
    }
    if wins == 0 {
        return 1.0;
    }
    let bin = Binomial::new(0.5, n).expect("valid binomial");
    1.0 - bin.cdf(wins as u64 - 1)
}
