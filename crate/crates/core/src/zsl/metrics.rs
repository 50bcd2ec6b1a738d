use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::ClassId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitTag {
    #[serde(rename = "ES")]
    Existing,
    #[serde(rename = "PS")]
    Proposed,
    /// Any other seen set, e.g. a random baseline.
    #[serde(rename = "other")]
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterTag {
    All,
    Rare,
    Common,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub class_id: ClassId,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
}

/// Per-class top-1 accuracies and their unweighted mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split_tag: SplitTag,
    pub filter_tag: FilterTag,
    /// Ascending by class id.
    pub per_class: Vec<ClassAccuracy>,
    pub mean_per_class_top1: f64,
    pub n_test_samples: usize,
}

impl EvalReport {
    pub fn classes(&self) -> Vec<ClassId> {
        self.per_class.iter().map(|c| c.class_id).collect()
    }

    /// Report restricted to `keep`, mean recomputed. `None` when nothing is kept.
    pub fn restricted(&self, keep: impl Fn(ClassId) -> bool, filter_tag: FilterTag) -> Option<EvalReport> {
        let per_class: Vec<ClassAccuracy> = self.per_class.iter().filter(|c| keep(c.class_id)).cloned().collect();
        if per_class.is_empty() {
            return None;
        }
        let mean = per_class.iter().map(|c| c.accuracy).sum::<f64>() / per_class.len() as f64;
        let n = per_class.iter().map(|c| c.total).sum();
        Some(EvalReport {
            split_tag: self.split_tag,
            filter_tag,
            per_class,
            mean_per_class_top1: mean,
            n_test_samples: n,
        })
    }
}

/// Average per-class top-1 accuracy over `classes`. Every class must have at
/// least one test sample and every truth must belong to `classes`.
pub fn per_class_top1(
    predictions: &[ClassId],
    truths: &[ClassId],
    classes: &[ClassId],
    split_tag: SplitTag,
) -> Result<EvalReport> {
    if predictions.len() != truths.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} truths",
            predictions.len(),
            truths.len()
        )));
    }
    let mut tally: BTreeMap<ClassId, (usize, usize)> = classes.iter().map(|&c| (c, (0, 0))).collect();
    for (&p, &t) in predictions.iter().zip(truths) {
        let entry = tally
            .get_mut(&t)
            .ok_or_else(|| Error::Param(format!("truth label {t} is not an evaluated class")))?;
        entry.1 += 1;
        if p == t {
            entry.0 += 1;
        }
    }
    let mut per_class = Vec::with_capacity(tally.len());
    for (class_id, (correct, total)) in tally {
        if total == 0 {
            return Err(Error::Param(format!("class {class_id} has no test samples")));
        }
        per_class.push(ClassAccuracy {
            class_id,
            correct,
            total,
            accuracy: correct as f64 / total as f64,
        });
    }
    if per_class.is_empty() {
        return Err(Error::Param("no classes to evaluate".into()));
    }
    let mean = per_class.iter().map(|c| c.accuracy).sum::<f64>() / per_class.len() as f64;
    Ok(EvalReport {
        split_tag,
        filter_tag: FilterTag::All,
        per_class,
        mean_per_class_top1: mean,
        n_test_samples: truths.len(),
    })
}
