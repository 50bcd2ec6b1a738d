use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack when comparing a strength against its column's nonzero
/// mean, so that a column of identical strengths never binarizes to 1 through
/// rounding in the mean.
const MEAN_TOLERANCE: f64 = 1e-9;

/// Attribute columns of a cluster after discarding irrelevant and
/// unremarkable ones.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAttributeView {
    /// Columns that are zero for every class.
    pub irrelevant: Vec<usize>,
    /// Non-irrelevant columns where no class exceeds the nonzero mean.
    pub unremarkable: Vec<usize>,
    /// Surviving columns, ascending; indexes the columns of the two matrices.
    pub retained: Vec<usize>,
    /// 0/1 class-by-retained-attribute matrix.
    pub binary: DMatrix<f64>,
    pub retained_semantics: DMatrix<f64>,
}

impl ClusterAttributeView {
    /// Number of classes holding a 1 in each retained column.
    pub fn support(&self) -> Vec<usize> {
        self.binary
            .column_iter()
            .map(|c| c.iter().filter(|&&v| v > 0.0).count())
            .collect()
    }
}

/// Splits the columns of a cluster's class-by-attribute matrix into
/// irrelevant, unremarkable and retained, and binarizes the retained ones: an
/// entry is 1 iff it strictly exceeds the mean of its column's nonzero
/// entries.
pub fn binarize_attributes(semantics: &DMatrix<f64>) -> ClusterAttributeView {
    let (rows, cols) = semantics.shape();
    let mut irrelevant = Vec::new();
    let mut unremarkable = Vec::new();
    let mut retained = Vec::new();
    let mut bin_cols: Vec<Vec<f64>> = Vec::new();
    for j in 0..cols {
        let col = semantics.column(j);
        let nonzero = col.iter().filter(|&&v| v != 0.0).count();
        if nonzero == 0 {
            irrelevant.push(j);
            continue;
        }
        let mean = col.sum() / nonzero as f64;
        let threshold = mean + MEAN_TOLERANCE * mean.abs();
        let bits: Vec<f64> = col.iter().map(|&v| if v > threshold { 1.0 } else { 0.0 }).collect();
        if bits.iter().all(|&b| b == 0.0) {
            unremarkable.push(j);
        } else {
            retained.push(j);
            bin_cols.push(bits);
        }
    }
    let binary = DMatrix::from_fn(rows, retained.len(), |i, r| bin_cols[r][i]);
    let retained_semantics = semantics.select_columns(retained.iter());
    ClusterAttributeView {
        irrelevant,
        unremarkable,
        retained,
        binary,
        retained_semantics,
    }
}

/// Like [`binarize_attributes`], but a cluster with no retained attribute is
/// an error.
pub fn filter_cluster_attributes(cluster_semantics: &DMatrix<f64>) -> Result<ClusterAttributeView> {
    if cluster_semantics.nrows() == 0 {
        return Err(Error::Cluster("empty cluster".into()));
    }
    let view = binarize_attributes(cluster_semantics);
    if view.retained.is_empty() {
        return Err(Error::DegenerateCluster);
    }
    Ok(view)
}

/// Per-attribute frequency `theta` and weight `-ln(theta)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeWeights {
    /// Attribute column each entry refers to.
    pub attributes: Vec<usize>,
    pub theta: Vec<f64>,
    pub weight: Vec<f64>,
}

/// Rarity weights from a binarized cluster: `theta` is the fraction of the
/// cluster's classes with a 1 in the column.
pub fn rarity_weights(view: &ClusterAttributeView) -> Result<AttributeWeights> {
    let n = view.binary.nrows() as f64;
    let support = view.support();
    if let Some(pos) = support.iter().position(|&s| s == 0) {
        return Err(Error::Param(format!(
            "attribute {} has an all-zero binary column",
            view.retained[pos]
        )));
    }
    let theta: Vec<f64> = support.iter().map(|&s| s as f64 / n).collect();
    let weight = theta.iter().map(|t| -t.ln()).collect();
    Ok(AttributeWeights {
        attributes: view.retained.clone(),
        theta,
        weight,
    })
}
