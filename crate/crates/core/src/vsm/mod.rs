//! Visual-semantic mining: grows the seed set by alternating a linear head
//! on frozen features, a diversity query over the unlabeled pool and a
//! rarity-weighted choice among the queried classes.

mod head;
mod mav;
mod mining;
mod weights;

pub use head::{softmax_loss_and_grad, train_linear_head, LinearHead, TrainConfig};
pub use mav::{
    compute_mavs, diversity_select, euclidean_cosine_distance, median_pairwise_distance, DistanceConfig,
    DiversityRanking, MavSet,
};
pub use mining::{compute_t, run_vsm, VsmConfig, VsmIteration, VsmTrace};
pub use weights::{admit_candidates, semantic_scores, vsm_attribute_weights, Candidate};
