//! Seed-set construction: Ward clustering of the class domain in attribute
//! space, a silhouette sweep for the cluster count, and one rarity-weighted
//! representative per cluster.

mod attributes;
mod hac;
mod select;
mod silhouette;

pub use attributes::{binarize_attributes, filter_cluster_attributes, rarity_weights, AttributeWeights, ClusterAttributeView};
pub use hac::{ward_linkage, Merge, MergeTree};
pub use select::{select_representatives, Provenance, SeedSet};
pub use silhouette::{
    distance_matrix, mean_silhouette, optimal_cluster_count, silhouette_from_distances, ClusterPartition,
    OptimalClustering,
};

use crate::catalog::{AttributeMatrix, ClassId};
use crate::error::Result;

/// Lowest cluster count considered by the silhouette sweep.
pub const DEFAULT_CLUSTER_LOWER_BOUND: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct SeedStage {
    pub clustering: OptimalClustering,
    pub seeds: SeedSet,
}

/// Runs the whole first stage over `domain` (class ids into `attributes`).
pub fn build_seed_set(attributes: &AttributeMatrix, domain: &[ClassId], lower_bound: usize) -> Result<SeedStage> {
    let semantics = attributes.rows(domain);
    let clustering = optimal_cluster_count(domain, &semantics, lower_bound)?;
    let seeds = select_representatives(&semantics, &clustering.partition)?;
    Ok(SeedStage { clustering, seeds })
}
