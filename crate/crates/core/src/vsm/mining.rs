use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::head::{train_linear_head, TrainConfig};
use super::mav::{compute_mavs, diversity_select, median_pairwise_distance, DistanceConfig};
use super::weights::{admit_candidates, semantic_scores, vsm_attribute_weights, Candidate};
use crate::catalog::{ClassId, Dataset};
use crate::error::{Error, Result};
use crate::seedset::{AttributeWeights, Provenance, SeedSet};

/// Samples queried per iteration: `max(5, ⌈3·ln a⌉)` for `a` images per class.
pub fn compute_t(avg_images_per_class: f64) -> usize {
    let t = (3.0 * avg_images_per_class.ln()).ceil();
    if t.is_finite() && t > 5.0 {
        t as usize
    } else {
        5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VsmConfig {
    /// Classes admitted per iteration.
    pub q: usize,
    /// Samples queried per iteration.
    pub t: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub momentum: f64,
    pub lambda_ec: f64,
    pub rng_seed: u64,
}

impl VsmConfig {
    pub fn new(q: usize, t: usize, lr: f64, rng_seed: u64) -> Self {
        Self {
            q,
            t,
            lr,
            epochs: 30,
            batch_size: 32,
            momentum: 0.9,
            lambda_ec: 0.5,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 || self.t == 0 {
            return Err(Error::Param("q and t must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda_ec) {
            return Err(Error::Param(format!("lambda_ec must lie in [0, 1], got {}", self.lambda_ec)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VsmIteration {
    /// 1-based.
    pub iteration: usize,
    /// Seed set at the start of the iteration.
    pub seed_set: Vec<ClassId>,
    pub train_accuracy: f64,
    pub euclid_scale: f64,
    pub queried_sample_ids: Vec<usize>,
    pub candidates: Vec<Candidate>,
    pub admitted: Vec<ClassId>,
    pub weights: AttributeWeights,
    pub cumulative_queried: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VsmTrace {
    pub iterations: Vec<VsmIteration>,
}

impl VsmTrace {
    pub fn total_queried(&self) -> usize {
        self.iterations.last().map_or(0, |it| it.cumulative_queried)
    }
}

/// Grows `seed` to `target` classes drawn from `domain`.
///
/// Each iteration trains a fresh head on the current seed classes, ranks the
/// not-yet-queried samples of the other domain classes by distance to the
/// nearest class MAV, queries the labels of the `t` farthest, scores their
/// classes by rarity-weighted attribute mass and admits the top `q`.
pub fn run_vsm(
    seed: &SeedSet,
    dataset: &Dataset,
    domain: &[ClassId],
    config: &VsmConfig,
    target: usize,
) -> Result<(SeedSet, VsmTrace)> {
    config.validate()?;
    let domain_set: BTreeSet<ClassId> = domain.iter().copied().collect();
    if let Some(c) = seed.members().iter().find(|c| !domain_set.contains(c)) {
        return Err(Error::Protocol(format!("seed class {c} is outside the domain")));
    }
    if target > domain_set.len() {
        return Err(Error::Param(format!(
            "target of {target} classes exceeds the domain of {}",
            domain_set.len()
        )));
    }
    if seed.len() > target {
        return Err(Error::Param(format!(
            "seed set already holds {} classes, more than the target {target}",
            seed.len()
        )));
    }

    let catalog = &dataset.catalog;
    let store = &dataset.features;
    let by_class = store.samples_by_class(catalog.len());
    let mut z = seed.clone();
    let mut queried = vec![false; store.len()];
    let mut trace = VsmTrace::default();
    let mut cumulative = 0;

    while z.len() < target {
        let iteration = trace.iterations.len() + 1;
        let train_cfg = TrainConfig {
            lr: config.lr,
            epochs: config.epochs,
            batch_size: config.batch_size,
            momentum: config.momentum,
            seed: config.rng_seed.wrapping_add(iteration as u64),
        };
        let (head, train_accuracy) = train_linear_head(store, z.members(), &train_cfg)?;
        let mavs = compute_mavs(&head, store);
        let euclid_scale = median_pairwise_distance(&mavs);

        let remaining: Vec<ClassId> = domain_set.iter().copied().filter(|&c| !z.contains(c)).collect();
        let pool: Vec<usize> = remaining
            .iter()
            .flat_map(|&c| by_class[c].iter().copied())
            .filter(|&s| !queried[s])
            .collect();

        let (queried_now, candidate_classes) = if pool.is_empty() {
            // Every remaining sample is already labeled; all remaining classes
            // are known candidates.
            log::warn!("iteration {iteration}: unlabeled pool exhausted, scoring all remaining classes");
            (Vec::new(), remaining.clone())
        } else {
            let ranking = diversity_select(
                &mavs,
                &pool,
                store,
                &head,
                config.t,
                DistanceConfig {
                    lambda_ec: config.lambda_ec,
                    euclid_scale,
                },
            )?;
            (ranking.selected_sample_ids, ranking.candidate_classes)
        };
        for &s in &queried_now {
            queried[s] = true;
        }
        cumulative += queried_now.len();

        let counts: Vec<u64> = z.members().iter().map(|&c| catalog.image_count(c)).collect();
        let weights = vsm_attribute_weights(&dataset.attributes.rows(z.members()), &counts)?;
        let scores = semantic_scores(&dataset.attributes.rows(&candidate_classes), &weights)?;
        let candidates: Vec<Candidate> = candidate_classes
            .iter()
            .zip(&scores)
            .map(|(&class_id, &score)| Candidate {
                class_id,
                score,
                overlaps_pretraining: catalog.overlaps(class_id),
            })
            .collect();
        let admitted = admit_candidates(&candidates, config.q, target - z.len());
        if admitted.is_empty() {
            return Err(Error::Numerical(format!("iteration {iteration} admitted no class")));
        }
        let seed_snapshot = z.members().to_vec();
        for &c in &admitted {
            z.push(c, Provenance::VsmIteration { iteration })?;
        }
        log::debug!("iteration {iteration}: admitted {admitted:?}, |Z| = {}", z.len());
        trace.iterations.push(VsmIteration {
            iteration,
            seed_set: seed_snapshot,
            train_accuracy,
            euclid_scale,
            queried_sample_ids: queried_now,
            candidates,
            admitted,
            weights,
            cumulative_queried: cumulative,
        });
    }
    Ok((z, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_formula() {
        assert_eq!(compute_t(11788.0 / 200.0), 13);
        assert_eq!(compute_t(14340.0 / 717.0), 9);
        assert_eq!(compute_t(1.0), 5);
        assert_eq!(compute_t(0.5), 5);
    }

    #[test]
    fn config_validation() {
        assert!(VsmConfig::new(0, 5, 0.01, 0).validate().is_err());
        let mut c = VsmConfig::new(2, 5, 0.01, 0);
        c.lambda_ec = 1.5;
        assert!(c.validate().is_err());
    }
}
