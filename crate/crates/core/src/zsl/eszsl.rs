//! Closed-form bilinear compatibility model.
//!
//! With sample features `F` (m×k), one-hot labels `Y` (m×s) and seen-class
//! attributes `A` (s×d), the model `V` (k×d) minimizes
//!
//! ```text
//! ‖F V Aᵀ − Y‖² + γ‖V Aᵀ‖² + λ‖F V‖² + γλ‖V‖²
//! ```
//!
//! whose stationary point is `V = (FᵀF + γI)⁻¹ Fᵀ Y A (AᵀA + λI)⁻¹`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::catalog::ClassId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EszslHyper {
    pub gamma: f64,
    pub lambda: f64,
}

impl Default for EszslHyper {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            lambda: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityModel {
    /// Feature-to-attribute map, k×d.
    pub v: DMatrix<f64>,
    pub hyper: EszslHyper,
}

pub fn train_eszsl(
    features: &DMatrix<f64>,
    onehot: &DMatrix<f64>,
    semantics: &DMatrix<f64>,
    hyper: EszslHyper,
) -> Result<CompatibilityModel> {
    let (m, k) = features.shape();
    let (s, d) = semantics.shape();
    if onehot.shape() != (m, s) {
        return Err(Error::Dimension(format!(
            "labels are {:?}, expected ({m}, {s})",
            onehot.shape()
        )));
    }
    if !(hyper.gamma > 0.0 && hyper.lambda > 0.0) {
        return Err(Error::Param(format!(
            "regularizers must be positive, got gamma={} lambda={}",
            hyper.gamma, hyper.lambda
        )));
    }
    let left = features.tr_mul(features) + DMatrix::identity(k, k) * hyper.gamma;
    let right = semantics.tr_mul(semantics) + DMatrix::identity(d, d) * hyper.lambda;
    let rhs = features.tr_mul(onehot) * semantics;

    let left = left
        .cholesky()
        .ok_or_else(|| Error::Numerical("feature Gram matrix is not positive definite".into()))?;
    let right = right
        .cholesky()
        .ok_or_else(|| Error::Numerical("attribute Gram matrix is not positive definite".into()))?;
    // V·R = L⁻¹·C  ⇔  R·Vᵀ = (L⁻¹·C)ᵀ, R symmetric.
    let z = left.solve(&rhs);
    let v = right.solve(&z.transpose()).transpose();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite compatibility matrix".into()));
    }
    Ok(CompatibilityModel { v, hyper })
}

impl CompatibilityModel {
    /// Compatibility of every sample row with every candidate row.
    pub fn scores(&self, features: &DMatrix<f64>, candidate_semantics: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if features.ncols() != self.v.nrows() || candidate_semantics.ncols() != self.v.ncols() {
            return Err(Error::Dimension(format!(
                "model is {}x{}, features have {} columns, candidates {}",
                self.v.nrows(),
                self.v.ncols(),
                features.ncols(),
                candidate_semantics.ncols()
            )));
        }
        Ok(features * &self.v * candidate_semantics.transpose())
    }

    /// Highest-compatibility candidate for each sample row; ties go to the
    /// lowest class id.
    pub fn predict_batch(
        &self,
        features: &DMatrix<f64>,
        candidates: &[ClassId],
        candidate_semantics: &DMatrix<f64>,
    ) -> Result<Vec<ClassId>> {
        if candidates.is_empty() {
            return Err(Error::Param("no candidate classes".into()));
        }
        if candidate_semantics.nrows() != candidates.len() {
            return Err(Error::Dimension(format!(
                "{} candidate rows for {} candidates",
                candidate_semantics.nrows(),
                candidates.len()
            )));
        }
        let scores = self.scores(features, candidate_semantics)?;
        Ok((0..scores.nrows())
            .map(|r| {
                let mut best = 0;
                for c in 1..candidates.len() {
                    let (s, b) = (scores[(r, c)], scores[(r, best)]);
                    if s > b || (s == b && candidates[c] < candidates[best]) {
                        best = c;
                    }
                }
                candidates[best]
            })
            .collect())
    }
}

/// Single-sample prediction over `candidates` (rows of `candidate_semantics`).
pub fn predict(
    model: &CompatibilityModel,
    x: &[f64],
    candidates: &[ClassId],
    candidate_semantics: &DMatrix<f64>,
) -> Result<ClassId> {
    let row = DMatrix::from_row_slice(1, x.len(), x);
    Ok(model.predict_batch(&row, candidates, candidate_semantics)?[0])
}
