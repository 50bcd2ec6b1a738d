use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::{ClassId, FeatureStore};
use crate::error::{Error, Result};
use crate::zsl::{feature_matrix, samples_of};

/// Softmax classification layer over frozen features.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    /// One row per class in `class_order`, k columns.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub class_order: Vec<ClassId>,
}

impl LinearHead {
    pub fn zeros(class_order: Vec<ClassId>, dim: usize) -> Self {
        let c = class_order.len();
        Self {
            weights: DMatrix::zeros(c, dim),
            bias: DVector::zeros(c),
            class_order,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.ncols()
    }

    /// Pre-softmax activations, one row per sample row of `x`.
    pub fn logits(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut z = x * self.weights.transpose();
        for mut row in z.row_iter_mut() {
            row += self.bias.transpose();
        }
        z
    }

    pub fn logits_one(&self, x: &[f32]) -> DVector<f64> {
        let x = DVector::from_iterator(x.len(), x.iter().map(|&v| v as f64));
        &self.weights * x + &self.bias
    }
}

/// Index of the largest entry; ties go to the earliest.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            epochs: 30,
            batch_size: 32,
            momentum: 0.9,
            seed: 0,
        }
    }
}

/// Mean softmax cross-entropy of `head` on rows of `x` with target indices
/// into the head's class order, and its gradient with respect to the weights
/// and bias.
pub fn softmax_loss_and_grad(head: &LinearHead, x: &DMatrix<f64>, targets: &[usize]) -> (f64, DMatrix<f64>, DVector<f64>) {
    loss_and_grad_columns(head, &x.transpose(), targets)
}

/// Same as [`softmax_loss_and_grad`] with one sample per column of `xt`.
fn loss_and_grad_columns(head: &LinearHead, xt: &DMatrix<f64>, targets: &[usize]) -> (f64, DMatrix<f64>, DVector<f64>) {
    let n = xt.ncols() as f64;
    let mut probs = &head.weights * xt;
    let mut loss = 0.0;
    for (j, mut col) in probs.column_iter_mut().enumerate() {
        col += &head.bias;
        let max = col.max();
        col.apply(|v| *v = (*v - max).exp());
        let sum = col.sum();
        col /= sum;
        loss -= col[targets[j]].max(f64::MIN_POSITIVE).ln();
        col[targets[j]] -= 1.0;
    }
    probs /= n;
    let mut grad_w = DMatrix::zeros(head.weights.nrows(), xt.nrows());
    for (p, x) in probs.column_iter().zip(xt.column_iter()) {
        grad_w.ger(1.0, &p, &x, 1.0);
    }
    let grad_b = probs.column_sum();
    (loss / n, grad_w, grad_b)
}

/// Trains a head on every sample of `classes` with seeded mini-batch gradient
/// descent with momentum, starting from zero weights. Returns the head and its
/// final training accuracy.
pub fn train_linear_head(store: &FeatureStore, classes: &[ClassId], cfg: &TrainConfig) -> Result<(LinearHead, f64)> {
    if classes.is_empty() {
        return Err(Error::Training("no classes to train on".into()));
    }
    if cfg.batch_size == 0 || !(cfg.lr > 0.0) {
        return Err(Error::Param("batch size and learning rate must be positive".into()));
    }
    let counts = store.class_counts(classes.iter().max().map_or(0, |m| m + 1));
    if let Some(&empty) = classes.iter().find(|&&c| counts[c] == 0) {
        return Err(Error::Training(format!("class {empty} has no samples")));
    }
    let samples = samples_of(store, classes);
    let position = |c: ClassId| classes.iter().position(|&x| x == c).unwrap();
    let targets: Vec<usize> = samples.iter().map(|&s| position(store.class_of(s))).collect();
    let x = feature_matrix(store, &samples);
    let xt = x.transpose();

    let mut head = LinearHead::zeros(classes.to_vec(), store.dim());
    let mut vel_w = DMatrix::zeros(head.weights.nrows(), head.weights.ncols());
    let mut vel_b = DVector::zeros(head.bias.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let xb = xt.select_columns(batch.iter());
            let tb: Vec<usize> = batch.iter().map(|&i| targets[i]).collect();
            let (_, gw, gb) = loss_and_grad_columns(&head, &xb, &tb);
            vel_w *= cfg.momentum;
            vel_w += &gw;
            vel_b *= cfg.momentum;
            vel_b += &gb;
            head.weights.zip_apply(&vel_w, |w, v| *w -= cfg.lr * v);
            head.bias.axpy(-cfg.lr, &vel_b, 1.0);
        }
    }
    if head.weights.iter().chain(head.bias.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("linear head diverged".into()));
    }
    let logits = head.logits(&x);
    let correct = logits
        .row_iter()
        .zip(&targets)
        .filter(|(row, &t)| argmax(row.iter().copied()) == t)
        .count();
    Ok((head, correct as f64 / samples.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_class_store() -> FeatureStore {
        let mut labels = Vec::new();
        let mut data = Vec::new();
        for i in 0..60 {
            let c = (i % 2) as u32;
            labels.push(c);
            let s = if c == 0 { 1.0 } else { -1.0 };
            data.extend([s, 0.0, 0.0]);
        }
        FeatureStore::new(3, labels, data).unwrap()
    }

    #[test]
    fn separable_pair_reaches_full_accuracy() {
        let cfg = TrainConfig::default();
        let (_, acc) = train_linear_head(&two_class_store(), &[0, 1], &cfg).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn deterministic_weights() {
        let cfg = TrainConfig { seed: 42, ..TrainConfig::default() };
        let a = train_linear_head(&two_class_store(), &[1, 0], &cfg).unwrap().0;
        let b = train_linear_head(&two_class_store(), &[1, 0], &cfg).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn empty_class_is_named() {
        let err = train_linear_head(&two_class_store(), &[0, 5], &TrainConfig::default()).unwrap_err();
        assert!(err.to_string().contains("class 5"), "{err}");
    }
}
