//! Domain-wide rare/common attribute designation and rare-filtered reports.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::catalog::{AttributeMatrix, ClassId};
use crate::seedset::binarize_attributes;
use crate::zsl::{EvalReport, FilterTag};

pub const DEFAULT_RARE_THRESHOLD: f64 = 0.05;
pub const DEFAULT_COMMON_THRESHOLD: f64 = 0.50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RarityDesignation {
    pub rare: Vec<usize>,
    pub common: Vec<usize>,
    pub neither: Vec<usize>,
    /// Irrelevant and unremarkable attributes of the whole domain.
    pub discarded: Vec<usize>,
}

/// Binarizes the domain as a single cluster and classifies every retained
/// attribute by the fraction of classes holding a 1: below `rare_threshold`
/// is rare, above `common_threshold` is common (both strict).
pub fn designate_rare_common(domain_semantics: &DMatrix<f64>, rare_threshold: f64, common_threshold: f64) -> RarityDesignation {
    let n = domain_semantics.nrows() as f64;
    let view = binarize_attributes(domain_semantics);
    let mut discarded: Vec<usize> = view.irrelevant.iter().chain(&view.unremarkable).copied().collect();
    discarded.sort_unstable();
    let (mut rare, mut common, mut neither) = (Vec::new(), Vec::new(), Vec::new());
    for (&attr, support) in view.retained.iter().zip(view.support()) {
        let support = support as f64;
        if support < rare_threshold * n {
            rare.push(attr);
        } else if support > common_threshold * n {
            common.push(attr);
        } else {
            neither.push(attr);
        }
    }
    RarityDesignation {
        rare,
        common,
        neither,
        discarded,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RarityMode {
    Rare,
    Common,
}

/// A filtered report, or an explicit marker when no test class qualifies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum FilteredReport {
    Report { report: EvalReport },
    Empty { mode: RarityMode },
}

impl FilteredReport {
    /// Number of qualifying test classes (Y_R or Y_C).
    pub fn class_count(&self) -> usize {
        match self {
            FilteredReport::Report { report } => report.per_class.len(),
            FilteredReport::Empty { .. } => 0,
        }
    }

    pub fn mean(&self) -> Option<f64> {
        match self {
            FilteredReport::Report { report } => Some(report.mean_per_class_top1),
            FilteredReport::Empty { .. } => None,
        }
    }
}

/// Test classes with a strictly positive raw strength on at least one of
/// `attributes`.
pub fn classes_exhibiting(attributes: &AttributeMatrix, classes: &[ClassId], designated: &[usize]) -> Vec<ClassId> {
    classes
        .iter()
        .copied()
        .filter(|&c| designated.iter().any(|&a| attributes.values()[(c, a)] > 0.0))
        .collect()
}

/// Restricts `report` to the test classes that exhibit a designated rare (or
/// common) attribute and recomputes the mean.
pub fn rare_filtered_report(
    report: &EvalReport,
    designation: &RarityDesignation,
    attributes: &AttributeMatrix,
    mode: RarityMode,
) -> FilteredReport {
    let (designated, tag) = match mode {
        RarityMode::Rare => (&designation.rare, FilterTag::Rare),
        RarityMode::Common => (&designation.common, FilterTag::Common),
    };
    let keep = classes_exhibiting(attributes, &report.classes(), designated);
    match report.restricted(|c| keep.contains(&c), tag) {
        Some(report) => FilteredReport::Report { report },
        None => FilteredReport::Empty { mode },
    }
}
