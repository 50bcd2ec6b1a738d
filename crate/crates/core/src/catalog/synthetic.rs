//! Planted-structure datasets for tests and dry runs.
//!
//! Classes fall into well-separated blobs in attribute space. A few "rare"
//! attribute columns are switched on for only `⌈0.05·N⌉` classes each, at
//! distinct strengths. Visual features are a fixed random linear image of the
//! attribute vector plus class and sample noise, so features carry both the
//! cluster structure and the rare attributes.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{AttributeMatrix, ClassCatalog, ClassId, ClassInfo, Dataset, ExistingRole, FeatureStore};
use crate::error::{Error, Result};

const ATTR_STD: f64 = 0.03;
const FEATURE_SCALE: f64 = 3.0;
const CLASS_OFFSET_STD: f64 = 0.1;
const SAMPLE_STD: f64 = 0.15;
const MAX_CENTROID_DRAWS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticConfig {
    pub n_classes: usize,
    pub d_attrs: usize,
    pub k_dim: usize,
    pub n_clusters: usize,
    pub rare_attr_count: usize,
    pub images_per_class: usize,
    pub rng_seed: u64,
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub dataset: Dataset,
    /// Planted blob of every class.
    pub cluster_of: Vec<usize>,
    /// Column indices of the planted rare attributes.
    pub rare_attributes: Vec<usize>,
    /// Classes holding each planted rare attribute, parallel to `rare_attributes`.
    pub rare_holders: Vec<Vec<ClassId>>,
}

impl SyntheticData {
    /// Classes that hold at least one planted rare attribute, ascending.
    pub fn rare_classes(&self) -> Vec<ClassId> {
        let mut v: Vec<ClassId> = self.rare_holders.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

/// Number of classes that carry each planted rare attribute.
pub fn rare_support(n_classes: usize) -> usize {
    (0.05 * n_classes as f64).ceil() as usize
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    let SyntheticConfig {
        n_classes,
        d_attrs,
        k_dim,
        n_clusters,
        rare_attr_count,
        images_per_class,
        rng_seed,
    } = *cfg;
    if n_classes == 0 || n_clusters == 0 || k_dim == 0 || images_per_class == 0 {
        return Err(Error::Param("synthetic sizes must be positive".into()));
    }
    if n_clusters > n_classes {
        return Err(Error::Param(format!("{n_clusters} clusters exceed {n_classes} classes")));
    }
    if rare_attr_count >= d_attrs {
        return Err(Error::Param(format!(
            "{rare_attr_count} rare attributes leave no cluster attributes out of {d_attrs}"
        )));
    }
    let support = rare_support(n_classes);
    // A rare column is only distinguishable from an unremarkable one once two
    // holders exist and one holder is still under 5% of the classes.
    if rare_attr_count > 0 && support < 2 {
        return Err(Error::Param(format!(
            "rare attributes need more than 20 classes, got {n_classes}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let dense = d_attrs - rare_attr_count;
    let centroids = draw_centroids(&mut rng, n_clusters, dense)?;

    let mut order: Vec<ClassId> = (0..n_classes).collect();
    order.shuffle(&mut rng);
    let mut cluster_of = vec![0; n_classes];
    for (pos, &c) in order.iter().enumerate() {
        cluster_of[c] = pos % n_clusters;
    }

    let attr_noise = Normal::new(0.0, ATTR_STD).unwrap();
    let mut values = DMatrix::zeros(n_classes, d_attrs);
    for c in 0..n_classes {
        let centroid = &centroids[cluster_of[c]];
        for j in 0..dense {
            if centroid[j] > 0.0 {
                values[(c, j)] = (centroid[j] + attr_noise.sample(&mut rng)).clamp(0.01, 1.0);
            }
        }
    }

    let rare_attributes: Vec<usize> = (dense..d_attrs).collect();
    let mut holders_pool: Vec<ClassId> = (0..n_classes).collect();
    holders_pool.shuffle(&mut rng);
    let mut rare_holders = Vec::with_capacity(rare_attr_count);
    for (r, &col) in rare_attributes.iter().enumerate() {
        // Disjoint holder sets while classes last, then wrap around.
        let holders: Vec<ClassId> = (0..support)
            .map(|i| holders_pool[(r * support + i) % n_classes])
            .collect();
        for &c in &holders {
            values[(c, col)] = rng.random_range(0.5..1.0);
        }
        let mut sorted = holders;
        sorted.sort_unstable();
        sorted.dedup();
        rare_holders.push(sorted);
    }

    let class_names: Vec<String> = (0..n_classes).map(|c| format!("class_{c:03}")).collect();
    let attribute_names: Vec<String> = (0..d_attrs)
        .map(|j| {
            if j < dense {
                format!("attr_{j:03}")
            } else {
                format!("rare_{:03}", j - dense)
            }
        })
        .collect();
    let attributes = AttributeMatrix::new(values.clone(), attribute_names, class_names.clone())?;

    let unit = Normal::new(0.0, 1.0).unwrap();
    let projection = DMatrix::from_fn(k_dim, d_attrs, |_, _| unit.sample(&mut rng))
        * (FEATURE_SCALE / (d_attrs as f64).sqrt());
    let offset = Normal::new(0.0, CLASS_OFFSET_STD).unwrap();
    let sample_noise = Normal::new(0.0, SAMPLE_STD).unwrap();
    let mut labels = Vec::with_capacity(n_classes * images_per_class);
    let mut data = Vec::with_capacity(n_classes * images_per_class * k_dim);
    for c in 0..n_classes {
        let attr = DVector::from_iterator(d_attrs, values.row(c).iter().copied());
        let mean = &projection * attr + DVector::from_fn(k_dim, |_, _| offset.sample(&mut rng));
        for _ in 0..images_per_class {
            labels.push(c as u32);
            data.extend(mean.iter().map(|m| (m + sample_noise.sample(&mut rng)) as f32));
        }
    }
    let features = FeatureStore::new(k_dim, labels, data)?;

    let mut role_order: Vec<ClassId> = (0..n_classes).collect();
    role_order.shuffle(&mut rng);
    let n_unseen = if n_classes >= 4 { n_classes.div_ceil(4).max(2) } else { 0 };
    let mut roles = vec![if n_unseen > 0 { Some(ExistingRole::Seen) } else { None }; n_classes];
    for &c in &role_order[..n_unseen] {
        roles[c] = Some(ExistingRole::Unseen);
    }
    let catalog = ClassCatalog::new(
        class_names
            .into_iter()
            .enumerate()
            .map(|(c, name)| ClassInfo {
                class_id: c,
                name,
                image_count: images_per_class as u64,
                overlaps_pretraining: false,
                existing_role: roles[c],
            })
            .collect(),
    )?;

    let dataset = Dataset::new(catalog, attributes, features)?;
    let out = SyntheticData {
        dataset,
        cluster_of,
        rare_attributes,
        rare_holders,
    };
    check_rare_predicate(&out)?;
    Ok(out)
}

fn draw_centroids(rng: &mut ChaCha8Rng, n_clusters: usize, dense: usize) -> Result<Vec<Vec<f64>>> {
    // Blob radius is ATTR_STD·√dense; centroids must sit 5 radii apart.
    let min_dist = 5.0 * ATTR_STD * (dense as f64).sqrt();
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(n_clusters);
    let mut draws = 0;
    while centroids.len() < n_clusters {
        draws += 1;
        if draws > MAX_CENTROID_DRAWS {
            return Err(Error::Param(format!(
                "cannot place {n_clusters} separated clusters in {dense} attributes"
            )));
        }
        let candidate: Vec<f64> = (0..dense)
            .map(|_| if rng.random_bool(0.25) { 0.0 } else { rng.random_range(0.2..0.9) })
            .collect();
        if candidate.iter().all(|&v| v == 0.0) {
            continue;
        }
        let far_enough = centroids.iter().all(|c| {
            c.iter()
                .zip(&candidate)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
                >= min_dist
        });
        if far_enough {
            centroids.push(candidate);
        }
    }
    Ok(centroids)
}

fn check_rare_predicate(data: &SyntheticData) -> Result<()> {
    if data.rare_attributes.is_empty() {
        return Ok(());
    }
    let n = data.dataset.catalog.len();
    let all: Vec<ClassId> = (0..n).collect();
    let designation = crate::rarity::designate_rare_common(&data.dataset.attributes.rows(&all), 0.05, 0.5);
    for &col in &data.rare_attributes {
        let present = data.dataset.attributes.values().column(col).iter().filter(|&&v| v > 0.0).count();
        if present > rare_support(n) || !designation.rare.contains(&col) {
            return Err(Error::Numerical(format!(
                "planted rare attribute {col} fails the rarity predicate"
            )));
        }
    }
    Ok(())
}
