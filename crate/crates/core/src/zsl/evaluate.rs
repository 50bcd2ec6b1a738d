use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::eszsl::{train_eszsl, EszslHyper};
use super::metrics::{per_class_top1, EvalReport, SplitTag};
use crate::catalog::{ClassId, Dataset, FeatureStore, SplitDefinition};
use crate::error::{Error, Result};

/// One line of an external predictions file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalPrediction {
    pub sample_id: usize,
    pub predicted_class_id: ClassId,
}

/// Reads JSON-lines of `{"sample_id": …, "predicted_class_id": …}`.
pub fn load_external_predictions(path: &Path) -> Result<Vec<ExternalPrediction>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                column: e.column(),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Samples of `classes`, ascending by sample id.
pub fn samples_of(store: &FeatureStore, classes: &[ClassId]) -> Vec<usize> {
    let wanted: BTreeSet<ClassId> = classes.iter().copied().collect();
    (0..store.len()).filter(|&i| wanted.contains(&store.class_of(i))).collect()
}

pub fn feature_matrix(store: &FeatureStore, samples: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(samples.len(), store.dim(), |r, c| store.feature(samples[r])[c] as f64)
}

/// Trains the compatibility model on `seen` and scores every sample of `test`
/// against the `test` classes only. No disjointness check is made.
pub fn evaluate_seen_set(
    dataset: &Dataset,
    seen: &[ClassId],
    test: &[ClassId],
    hyper: EszslHyper,
    tag: SplitTag,
) -> Result<EvalReport> {
    if seen.is_empty() || test.is_empty() {
        return Err(Error::Param("seen and test class sets must be nonempty".into()));
    }
    let store = &dataset.features;
    let train = samples_of(store, seen);
    let column: HashMap<ClassId, usize> = seen.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let x = feature_matrix(store, &train);
    let mut y = DMatrix::zeros(train.len(), seen.len());
    for (r, &s) in train.iter().enumerate() {
        y[(r, column[&store.class_of(s)])] = 1.0;
    }
    let model = train_eszsl(&x, &y, &dataset.attributes.rows(seen), hyper)?;

    let mut candidates = test.to_vec();
    candidates.sort_unstable();
    let test_samples = samples_of(store, &candidates);
    let preds = model.predict_batch(
        &feature_matrix(store, &test_samples),
        &candidates,
        &dataset.attributes.rows(&candidates),
    )?;
    let truths: Vec<ClassId> = test_samples.iter().map(|&s| store.class_of(s)).collect();
    per_class_top1(&preds, &truths, &candidates, tag)
}

/// Scores externally produced labels for every sample of `test`.
pub fn score_external(
    dataset: &Dataset,
    test: &[ClassId],
    predictions: &[ExternalPrediction],
    tag: SplitTag,
) -> Result<EvalReport> {
    let by_sample: HashMap<usize, ClassId> = predictions.iter().map(|p| (p.sample_id, p.predicted_class_id)).collect();
    let allowed: BTreeSet<ClassId> = test.iter().copied().collect();
    let test_samples = samples_of(&dataset.features, test);
    let mut preds = Vec::with_capacity(test_samples.len());
    for &s in &test_samples {
        let p = *by_sample
            .get(&s)
            .ok_or_else(|| Error::Format(format!("no external prediction for test sample {s}")))?;
        if !allowed.contains(&p) {
            return Err(Error::Protocol(format!(
                "external prediction {p} for sample {s} is not a common unseen class"
            )));
        }
        preds.push(p);
    }
    let truths: Vec<ClassId> = test_samples.iter().map(|&s| dataset.features.class_of(s)).collect();
    let mut classes = test.to_vec();
    classes.sort_unstable();
    per_class_top1(&preds, &truths, &classes, tag)
}

/// Evaluates the existing or proposed seen set of `split` on its common
/// unseen classes.
pub fn evaluate_split(
    split: &SplitDefinition,
    which: SplitTag,
    dataset: &Dataset,
    hyper: EszslHyper,
    external: Option<&[ExternalPrediction]>,
) -> Result<EvalReport> {
    let seen = match which {
        SplitTag::Existing => &split.seen_existing,
        SplitTag::Proposed => &split.seen_proposed,
        SplitTag::Other => return Err(Error::Param("evaluate_split takes ES or PS".into())),
    };
    let common: BTreeSet<ClassId> = split.common_unseen.iter().copied().collect();
    if let Some(c) = seen.iter().find(|c| common.contains(c)) {
        return Err(Error::Protocol(format!("seen class {c} is also a common unseen class")));
    }
    match external {
        Some(preds) => score_external(dataset, &split.common_unseen, preds, which),
        None => evaluate_seen_set(dataset, seen, &split.common_unseen, hyper, which),
    }
}
