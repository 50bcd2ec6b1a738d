use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hac::ward_linkage;
use crate::catalog::ClassId;
use crate::error::{Error, Result};

/// Flat clustering of a class domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPartition {
    /// Domain classes; `assignment[i]` is the cluster of `classes[i]`.
    pub classes: Vec<ClassId>,
    pub assignment: Vec<usize>,
    pub n_clusters: usize,
    /// Classes that form a cluster on their own.
    pub singletons: Vec<ClassId>,
}

impl ClusterPartition {
    pub fn new(classes: Vec<ClassId>, assignment: Vec<usize>) -> Result<Self> {
        if classes.len() != assignment.len() {
            return Err(Error::Dimension(format!(
                "{} classes but {} assignments",
                classes.len(),
                assignment.len()
            )));
        }
        let n_clusters = assignment.iter().max().map_or(0, |m| m + 1);
        let mut sizes = vec![0usize; n_clusters];
        for &a in &assignment {
            sizes[a] += 1;
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::Cluster("cluster labels must be contiguous".into()));
        }
        let singletons = classes
            .iter()
            .zip(&assignment)
            .filter(|(_, &a)| sizes[a] == 1)
            .map(|(&c, _)| c)
            .collect();
        Ok(Self {
            classes,
            assignment,
            n_clusters,
            singletons,
        })
    }

    /// Positions (into `classes`) of the members of cluster `j`, ascending.
    pub fn member_positions(&self, j: usize) -> Vec<usize> {
        (0..self.classes.len()).filter(|&i| self.assignment[i] == j).collect()
    }

    pub fn members(&self, j: usize) -> Vec<ClassId> {
        self.member_positions(j).into_iter().map(|i| self.classes[i]).collect()
    }
}

/// Pairwise Euclidean distances between the rows of `points`.
pub fn distance_matrix(points: &DMatrix<f64>) -> DMatrix<f64> {
    let n = points.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (points.row(i) - points.row(j)).norm();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    d
}

/// Mean silhouette coefficient of `labels` given precomputed distances.
/// Members of singleton clusters contribute 0, as do points whose intra and
/// nearest-cluster means are both 0.
pub fn silhouette_from_distances(dist: &DMatrix<f64>, labels: &[usize]) -> Result<f64> {
    let n = labels.len();
    let k = labels.iter().max().map_or(0, |m| m + 1);
    if k < 2 {
        return Err(Error::Cluster("silhouette needs at least 2 clusters".into()));
    }
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    let mut sums = vec![0.0; k];
    let mut total = 0.0;
    for p in 0..n {
        let own = labels[p];
        if sizes[own] == 1 {
            continue;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        for q in 0..n {
            sums[labels[q]] += dist[(p, q)];
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Mean silhouette of a partition over the given semantic rows (one row per
/// partition class, same order).
pub fn mean_silhouette(partition: &ClusterPartition, semantics: &DMatrix<f64>) -> Result<f64> {
    if semantics.nrows() != partition.classes.len() {
        return Err(Error::Dimension(format!(
            "{} semantic rows for {} classes",
            semantics.nrows(),
            partition.classes.len()
        )));
    }
    silhouette_from_distances(&distance_matrix(semantics), &partition.assignment)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalClustering {
    pub partition: ClusterPartition,
    /// `(cluster count, mean silhouette)` for every evaluated cut.
    pub sweep: Vec<(usize, f64)>,
}

/// Cuts one Ward tree at every cluster count in `[max(2, lower_bound), N−1]`
/// and keeps the cut with the highest mean silhouette, preferring fewer
/// clusters on ties.
pub fn optimal_cluster_count(
    classes: &[ClassId],
    semantics: &DMatrix<f64>,
    lower_bound: usize,
) -> Result<OptimalClustering> {
    let n = classes.len();
    if semantics.nrows() != n {
        return Err(Error::Dimension(format!("{} semantic rows for {n} classes", semantics.nrows())));
    }
    if lower_bound < 2 {
        return Err(Error::Param(format!("cluster lower bound must be at least 2, got {lower_bound}")));
    }
    if n < lower_bound + 1 {
        return Err(Error::Cluster(format!(
            "domain of {n} classes is too small for a lower bound of {lower_bound} clusters"
        )));
    }
    let tree = ward_linkage(semantics)?;
    let dist = distance_matrix(semantics);
    let sweep: Vec<(usize, f64)> = (lower_bound..n)
        .into_par_iter()
        .map(|i| {
            let labels = tree.cut(i)?;
            Ok((i, silhouette_from_distances(&dist, &labels)?))
        })
        .collect::<Result<_>>()?;
    let &(best_i, _) = sweep
        .iter()
        .fold(None, |best: Option<&(usize, f64)>, cand| match best {
            Some(b) if b.1 >= cand.1 => Some(b),
            _ => Some(cand),
        })
        .expect("sweep is nonempty");
    let partition = ClusterPartition::new(classes.to_vec(), tree.cut(best_i)?)?;
    Ok(OptimalClustering { partition, sweep })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_blobs_score_high() {
        let pts = DMatrix::from_row_slice(6, 2, &[0.0, 0.0, 0.1, 0.0, 0.0, 0.1, 10.0, 10.0, 10.1, 10.0, 10.0, 10.1]);
        let p = ClusterPartition::new((0..6).collect(), vec![0, 0, 0, 1, 1, 1]).unwrap();
        assert!(mean_silhouette(&p, &pts).unwrap() > 0.9);
    }

    #[test]
    fn all_singletons_score_zero() {
        let pts = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 5.0]);
        let p = ClusterPartition::new(vec![4, 7, 9], vec![0, 1, 2]).unwrap();
        assert_eq!(mean_silhouette(&p, &pts).unwrap(), 0.0);
        assert_eq!(p.singletons, vec![4, 7, 9]);
    }

    #[test]
    fn single_cluster_is_an_error() {
        let pts = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let p = ClusterPartition::new(vec![0, 1], vec![0, 0]).unwrap();
        assert!(mean_silhouette(&p, &pts).is_err());
    }

    #[test]
    fn lower_bound_is_enforced() {
        // Two obvious blobs of three, but at least five clusters are required.
        let pts = DMatrix::from_row_slice(6, 1, &[0.0, 0.1, 0.2, 10.0, 10.1, 10.2]);
        let best = optimal_cluster_count(&(0..6).collect::<Vec<_>>(), &pts, 5).unwrap();
        assert_eq!(best.partition.n_clusters, 5);
        assert_eq!(best.sweep.len(), 1);
    }

    #[test]
    fn too_small_domain() {
        let pts = DMatrix::zeros(5, 2);
        assert!(optimal_cluster_count(&[0, 1, 2, 3, 4], &pts, 5).is_err());
    }

    #[test]
    fn finds_three_blobs() {
        let mut data = Vec::new();
        for c in 0..3 {
            for i in 0..4 {
                data.push(c as f64 * 10.0 + i as f64 * 0.1);
                data.push((c * c) as f64 * 3.0 - i as f64 * 0.05);
            }
        }
        let pts = DMatrix::from_row_slice(12, 2, &data);
        let best = optimal_cluster_count(&(0..12).collect::<Vec<_>>(), &pts, 2).unwrap();
        assert_eq!(best.partition.n_clusters, 3);
        assert_eq!(best.partition.assignment, vec![0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
    }
}
