//! Ward-linkage agglomerative clustering.
//!
//! Merge heights follow the usual convention where two singletons merge at
//! their Euclidean distance and, in general, clusters `u`, `v` merge at
//! `sqrt(2·|u|·|v| / (|u|+|v|)) · ‖c_u − c_v‖`. Distances are maintained with
//! the Lance–Williams recurrence on squared heights.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    /// Node ids: leaves are `0..n`, the merge at step `s` creates node `n + s`.
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

/// Full merge sequence over `n_leaves` points, in merge order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeTree {
    n_leaves: usize,
    merges: Vec<Merge>,
}

impl MergeTree {
    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.height).collect()
    }

    /// Flat assignment with exactly `n_clusters` clusters, obtained by applying
    /// the first `n − n_clusters` merges. Cluster labels are numbered by the
    /// smallest leaf they contain.
    pub fn cut(&self, n_clusters: usize) -> Result<Vec<usize>> {
        let n = self.n_leaves;
        if n_clusters == 0 || n_clusters > n {
            return Err(Error::Cluster(format!("cannot cut {n} leaves into {n_clusters} clusters")));
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        // Representative leaf of every node created so far.
        let mut node_leaf: Vec<usize> = (0..n).collect();
        for m in &self.merges[..n - n_clusters] {
            let (a, b) = (node_leaf[m.left], node_leaf[m.right]);
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            parent[hi] = lo;
            node_leaf.push(lo);
        }
        let mut label_of_root = vec![usize::MAX; n];
        let mut next = 0;
        let mut labels = Vec::with_capacity(n);
        for leaf in 0..n {
            let r = find(&mut parent, leaf);
            if label_of_root[r] == usize::MAX {
                label_of_root[r] = next;
                next += 1;
            }
            labels.push(label_of_root[r]);
        }
        Ok(labels)
    }
}

/// Runs Ward agglomeration over the rows of `points`. At each step the pair
/// with the smallest Ward height merges; ties go to the pair found first in
/// slot order.
pub fn ward_linkage(points: &DMatrix<f64>) -> Result<MergeTree> {
    let n = points.nrows();
    if n < 2 {
        return Err(Error::Cluster(format!("need at least 2 rows to cluster, got {n}")));
    }
    // Squared Ward heights between active slots.
    let mut d2 = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (points.row(i) - points.row(j)).norm_squared();
            d2[(i, j)] = v;
            d2[(j, i)] = v;
        }
    }
    let mut active: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut node = (0..n).collect::<Vec<usize>>();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for (ai, &i) in active.iter().enumerate() {
            for &j in &active[ai + 1..] {
                if d2[(i, j)] < best.2 {
                    best = (i, j, d2[(i, j)]);
                }
            }
        }
        let (i, j, h2) = best;
        if !h2.is_finite() {
            return Err(Error::Numerical("non-finite Ward distance".into()));
        }
        let (ni, nj) = (size[i] as f64, size[j] as f64);
        for &k in &active {
            if k == i || k == j {
                continue;
            }
            let nk = size[k] as f64;
            let v = ((ni + nk) * d2[(i, k)] + (nj + nk) * d2[(j, k)] - nk * h2) / (ni + nj + nk);
            let v = v.max(0.0);
            d2[(i, k)] = v;
            d2[(k, i)] = v;
        }
        merges.push(Merge {
            left: node[i].min(node[j]),
            right: node[i].max(node[j]),
            height: h2.sqrt(),
            size: size[i] + size[j],
        });
        size[i] += size[j];
        node[i] = n + step;
        active.retain(|&k| k != j);
    }
    Ok(MergeTree { n_leaves: n, merges })
}
