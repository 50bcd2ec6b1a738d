//! Seen-class selection for attribute-based zero-shot learning.
//!
//! Given a class attribute matrix and frozen per-image features, the crate
//! picks a seen-class set that covers the visual diversity and the rare
//! attributes of the available classes, then compares it with a predetermined
//! split on a held-out set of common unseen classes.
//!
//! - [`catalog`]: data model, file formats, synthetic data, unseen-set split
//! - [`seedset`]: Ward clustering and rarity-weighted cluster representatives
//! - [`vsm`]: iterative visual-semantic mining up to the target size
//! - [`zsl`]: closed-form compatibility model and per-class top-1 accuracy
//! - [`rarity`]: rare/common attribute designation and filtered reports
//! - [`pipeline`]: config handling and the end-to-end run with its artifacts

pub mod catalog;
pub mod error;
pub mod pipeline;
pub mod rarity;
pub mod seedset;
pub mod vsm;
pub mod zsl;

pub use error::{Error, ErrorKind, Result};
