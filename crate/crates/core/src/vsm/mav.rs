use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::head::{argmax, LinearHead};
use crate::catalog::{ClassId, FeatureStore};
use crate::error::{Error, Result};

/// Mean activation vector per seed class, in the head's logit space.
#[derive(Debug, Clone, PartialEq)]
pub struct MavSet {
    pub classes: Vec<ClassId>,
    pub means: Vec<DVector<f64>>,
    /// Number of samples averaged for each class.
    pub support_count: Vec<usize>,
    /// Set when no sample of the class was classified correctly and the mean
    /// runs over all of its samples instead.
    pub fallback: Vec<bool>,
}

impl MavSet {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

/// Averages the logits of each head class's correctly classified samples.
pub fn compute_mavs(head: &LinearHead, store: &FeatureStore) -> MavSet {
    let n_classes = head.class_order.iter().max().map_or(0, |m| m + 1);
    let groups = store.samples_by_class(n_classes);
    let c = head.class_order.len();
    let mut means = Vec::with_capacity(c);
    let mut support_count = Vec::with_capacity(c);
    let mut fallback = Vec::with_capacity(c);
    for (row, &class) in head.class_order.iter().enumerate() {
        let avs: Vec<DVector<f64>> = groups[class].iter().map(|&s| head.logits_one(store.feature(s))).collect();
        let correct: Vec<&DVector<f64>> = avs.iter().filter(|av| argmax(av.iter().copied()) == row).collect();
        let (used, fell_back): (Vec<&DVector<f64>>, bool) = if correct.is_empty() {
            (avs.iter().collect(), true)
        } else {
            (correct, false)
        };
        let mut mean = DVector::zeros(c);
        for av in &used {
            mean += *av;
        }
        if !used.is_empty() {
            mean /= used.len() as f64;
        }
        means.push(mean);
        support_count.push(used.len());
        fallback.push(fell_back);
    }
    MavSet {
        classes: head.class_order.clone(),
        means,
        support_count,
        fallback,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceConfig {
    /// Weight of the scaled Euclidean term; the cosine term gets the rest.
    pub lambda_ec: f64,
    pub euclid_scale: f64,
}

/// `λ·‖μ−f‖/scale + (1−λ)·(1 − cos(μ, f))`. The cosine term is 1 when either
/// vector is zero.
pub fn euclidean_cosine_distance(mu: &[f64], f: &[f64], lambda_ec: f64, euclid_scale: f64) -> Result<f64> {
    if mu.len() != f.len() {
        return Err(Error::Dimension(format!("vectors of length {} and {}", mu.len(), f.len())));
    }
    let (mut diff2, mut dot, mut nm, mut nf) = (0.0, 0.0, 0.0, 0.0);
    for (a, b) in mu.iter().zip(f) {
        diff2 += (a - b) * (a - b);
        dot += a * b;
        nm += a * a;
        nf += b * b;
    }
    let cos_term = if nm == 0.0 || nf == 0.0 {
        1.0
    } else {
        (1.0 - dot / (nm.sqrt() * nf.sqrt())).max(0.0)
    };
    Ok(lambda_ec * diff2.sqrt() / euclid_scale + (1.0 - lambda_ec) * cos_term)
}

/// Median Euclidean distance over all MAV pairs; 1 when fewer than two MAVs
/// exist or the median is 0.
pub fn median_pairwise_distance(mavs: &MavSet) -> f64 {
    let mut d = Vec::new();
    for i in 0..mavs.len() {
        for j in (i + 1)..mavs.len() {
            d.push((&mavs.means[i] - &mavs.means[j]).norm());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    let median = if d.len() % 2 == 0 { 0.5 * (d[mid - 1] + d[mid]) } else { d[mid] };
    if median > 0.0 && median.is_finite() {
        median
    } else {
        1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityRanking {
    /// `(sample id, min distance to any MAV)` for every pool sample, in pool order.
    pub min_distance: Vec<(usize, f64)>,
    /// The `t` most distant samples, most distant first.
    pub selected_sample_ids: Vec<usize>,
    /// Ground-truth classes of the selected samples, ascending and unique.
    pub candidate_classes: Vec<ClassId>,
}

/// Ranks pool samples by their distance to the nearest MAV in the head's
/// logit space and keeps the `t` farthest (ties to the lower sample id).
pub fn diversity_select(
    mavs: &MavSet,
    pool: &[usize],
    store: &FeatureStore,
    head: &LinearHead,
    t: usize,
    distance: DistanceConfig,
) -> Result<DiversityRanking> {
    if mavs.is_empty() {
        return Err(Error::Param("no mean activation vectors".into()));
    }
    let min_distance: Vec<(usize, f64)> = pool
        .par_iter()
        .map(|&s| {
            let av = head.logits_one(store.feature(s));
            let mut best = f64::INFINITY;
            for mu in &mavs.means {
                best = best.min(euclidean_cosine_distance(
                    mu.as_slice(),
                    av.as_slice(),
                    distance.lambda_ec,
                    distance.euclid_scale,
                )?);
            }
            Ok((s, best))
        })
        .collect::<Result<_>>()?;
    let mut ranked = min_distance.clone();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let selected_sample_ids: Vec<usize> = ranked.iter().take(t).map(|&(s, _)| s).collect();
    let mut candidate_classes: Vec<ClassId> = selected_sample_ids.iter().map(|&s| store.class_of(s)).collect();
    candidate_classes.sort_unstable();
    candidate_classes.dedup();
    Ok(DiversityRanking {
        min_distance,
        selected_sample_ids,
        candidate_classes,
    })
}
