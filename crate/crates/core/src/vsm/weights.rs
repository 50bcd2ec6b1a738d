use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::catalog::ClassId;
use crate::error::{Error, Result};
use crate::seedset::AttributeWeights;

/// Image-weighted attribute frequencies over the current seed classes:
/// `theta_l = Σ a_cl·IC_c / Σ IC_c`, weight `-ln(theta_l)`. Attributes absent
/// from every seed class get the finite cap `-ln(1 / (1 + Σ IC_c))`.
pub fn vsm_attribute_weights(seed_semantics: &DMatrix<f64>, image_counts: &[u64]) -> Result<AttributeWeights> {
    if seed_semantics.nrows() != image_counts.len() {
        return Err(Error::Dimension(format!(
            "{} seed rows for {} image counts",
            seed_semantics.nrows(),
            image_counts.len()
        )));
    }
    let total: f64 = image_counts.iter().map(|&c| c as f64).sum();
    if total <= 0.0 {
        return Err(Error::Param("seed classes hold no images".into()));
    }
    let cap = (1.0 + total).ln();
    let d = seed_semantics.ncols();
    let mut theta = Vec::with_capacity(d);
    let mut weight = Vec::with_capacity(d);
    for l in 0..d {
        let mass: f64 = seed_semantics
            .column(l)
            .iter()
            .zip(image_counts)
            .map(|(a, &ic)| a * ic as f64)
            .sum();
        let t = mass / total;
        theta.push(t);
        weight.push(if t > 0.0 { -t.ln() } else { cap });
    }
    Ok(AttributeWeights {
        attributes: (0..d).collect(),
        theta,
        weight,
    })
}

/// Rarity-weighted attribute mass of each candidate row.
pub fn semantic_scores(candidate_semantics: &DMatrix<f64>, weights: &AttributeWeights) -> Result<Vec<f64>> {
    if candidate_semantics.ncols() != weights.weight.len() {
        return Err(Error::Dimension(format!(
            "{} attributes but {} weights",
            candidate_semantics.ncols(),
            weights.weight.len()
        )));
    }
    Ok(candidate_semantics
        .row_iter()
        .map(|row| row.iter().zip(&weights.weight).map(|(a, w)| a * w).sum())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub class_id: ClassId,
    pub score: f64,
    pub overlaps_pretraining: bool,
}

/// Orders candidates by (overlap flag first, score descending, class id
/// ascending) and admits the first `min(q, |H|, remaining_capacity)`.
pub fn admit_candidates(candidates: &[Candidate], q: usize, remaining_capacity: usize) -> Vec<ClassId> {
    let mut sorted = candidates.to_vec();
    sorted.sort_by(|a, b| {
        b.overlaps_pretraining
            .cmp(&a.overlaps_pretraining)
            .then(b.score.total_cmp(&a.score))
            .then(a.class_id.cmp(&b.class_id))
    });
    sorted
        .into_iter()
        .take(q.min(remaining_capacity))
        .map(|c| c.class_id)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(class_id: ClassId, score: f64, overlaps_pretraining: bool) -> Candidate {
        Candidate {
            class_id,
            score,
            overlaps_pretraining,
        }
    }

    #[test]
    fn saturated_attribute_has_zero_weight() {
        let w = vsm_attribute_weights(&DMatrix::from_element(1, 1, 1.0), &[12]).unwrap();
        assert_eq!(w.theta, vec![1.0]);
        assert_eq!(w.weight, vec![0.0]);
    }

    #[test]
    fn image_weighted_frequency() {
        let sem = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let w = vsm_attribute_weights(&sem, &[10, 30]).unwrap();
        assert_eq!(w.theta, vec![0.25]);
        assert!((w.weight[0] - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn absent_attribute_gets_the_cap() {
        let sem = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.01, 0.0]);
        let w = vsm_attribute_weights(&sem, &[10, 30]).unwrap();
        assert!((w.weight[1] - 41f64.ln()).abs() < 1e-12);
        assert!(w.weight[1] > w.weight[0]);
    }

    #[test]
    fn scores() {
        let w = AttributeWeights {
            attributes: vec![0, 1, 2],
            theta: vec![1.0; 3],
            weight: vec![0.0, 2.0, 0.0],
        };
        let s = semantic_scores(&DMatrix::from_row_slice(1, 3, &[0.0, 1.0, 0.0]), &w).unwrap();
        assert_eq!(s, vec![2.0]);
        let zero = AttributeWeights {
            weight: vec![0.0; 3],
            ..w.clone()
        };
        let s = semantic_scores(&DMatrix::from_element(4, 3, 0.7), &zero).unwrap();
        assert!(s.iter().all(|&v| v == 0.0));
        assert!(semantic_scores(&DMatrix::zeros(1, 2), &w).is_err());
    }

    #[test]
    fn admission_rules() {
        assert_eq!(admit_candidates(&[cand(9, 0.1, false)], 2, 10), vec![9]);
        let h = [cand(0, 5.0, false), cand(1, 3.0, false), cand(2, 1.0, false)];
        assert_eq!(admit_candidates(&h, 2, 10), vec![0, 1]);
        let h = [cand(0, 5.0, false), cand(1, 3.0, false), cand(2, 1.0, true)];
        assert_eq!(admit_candidates(&h, 2, 10), vec![2, 0]);
        assert_eq!(admit_candidates(&h, 2, 1), vec![2]);
        let tied = [cand(4, 1.0, false), cand(3, 1.0, false)];
        assert_eq!(admit_candidates(&tied, 1, 10), vec![3]);
    }
}
