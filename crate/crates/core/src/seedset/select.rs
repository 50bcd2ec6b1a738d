use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::attributes::{filter_cluster_attributes, rarity_weights};
use super::silhouette::ClusterPartition;
use crate::catalog::ClassId;
use crate::error::{Error, Result};

/// Why a class is in the seed set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    ClusterRepresentative { cluster: usize },
    Outlier,
    VsmIteration { iteration: usize },
}

/// Ordered, duplicate-free set of selected classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSet {
    members: Vec<ClassId>,
    provenance: Vec<Provenance>,
}

impl SeedSet {
    pub fn new() -> Self {
        Self {
            members: Vec::new(),
            provenance: Vec::new(),
        }
    }

    pub fn push(&mut self, class: ClassId, tag: Provenance) -> Result<()> {
        if self.members.contains(&class) {
            return Err(Error::Param(format!("class {class} is already in the seed set")));
        }
        self.members.push(class);
        self.provenance.push(tag);
        Ok(())
    }

    pub fn members(&self) -> &[ClassId] {
        &self.members
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, class: ClassId) -> bool {
        self.members.contains(&class)
    }
}

impl Default for SeedSet {
    fn default() -> Self {
        Self::new()
    }
}

/// Picks one class per cluster. Singleton clusters contribute their only class
/// as an outlier. Other clusters contribute the class maximizing the
/// rarity-weighted mass of its binarized, retained attributes; a cluster with
/// no retained attribute falls back to the class nearest its centroid.
///
/// `domain_semantics` has one row per `partition.classes` entry.
pub fn select_representatives(domain_semantics: &DMatrix<f64>, partition: &ClusterPartition) -> Result<SeedSet> {
    if domain_semantics.nrows() != partition.classes.len() {
        return Err(Error::Dimension(format!(
            "{} semantic rows for {} classes",
            domain_semantics.nrows(),
            partition.classes.len()
        )));
    }
    let mut seeds = SeedSet::new();
    for j in 0..partition.n_clusters {
        let positions = partition.member_positions(j);
        if positions.len() == 1 {
            seeds.push(partition.classes[positions[0]], Provenance::Outlier)?;
            continue;
        }
        let sem = domain_semantics.select_rows(positions.iter());
        let local = match filter_cluster_attributes(&sem) {
            Ok(view) => {
                let weights = rarity_weights(&view)?;
                let w = DVector::from_vec(weights.weight);
                let scores = view.binary.component_mul(&view.retained_semantics) * w;
                argmax_by_class(&positions, partition, scores.as_slice())
            }
            Err(Error::DegenerateCluster) => {
                log::warn!("cluster {j} has no informative attribute; using the class nearest its centroid");
                let centroid = sem.row_mean();
                let neg_dist: Vec<f64> = (0..sem.nrows()).map(|r| -(sem.row(r) - &centroid).norm()).collect();
                argmax_by_class(&positions, partition, &neg_dist)
            }
            Err(e) => return Err(e),
        };
        seeds.push(partition.classes[positions[local]], Provenance::ClusterRepresentative { cluster: j })?;
    }
    Ok(seeds)
}

/// Index into `positions` of the highest score; ties go to the lowest class id.
fn argmax_by_class(positions: &[usize], partition: &ClusterPartition, scores: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..positions.len() {
        let (s, b) = (scores[i], scores[best]);
        if s > b || (s == b && partition.classes[positions[i]] < partition.classes[positions[best]]) {
            best = i;
        }
    }
    best
}
