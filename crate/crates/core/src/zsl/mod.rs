//! Conventional zero-shot evaluation: a closed-form compatibility model and
//! average per-class top-1 accuracy on the common unseen classes.

mod eszsl;
mod evaluate;
mod metrics;

pub use eszsl::{predict, train_eszsl, CompatibilityModel, EszslHyper};
pub use evaluate::{
    evaluate_seen_set, evaluate_split, feature_matrix, load_external_predictions, samples_of, score_external,
    ExternalPrediction,
};
pub use metrics::{per_class_top1, ClassAccuracy, EvalReport, FilterTag, SplitTag};
