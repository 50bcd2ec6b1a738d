//! On-disk documents written and read by the pipeline stages.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::catalog::{ClassId, ClassInfo, SplitDefinition};
use crate::error::{Error, Result};
use crate::rarity::FilteredReport;
use crate::seedset::{Provenance, SeedSet};
use crate::vsm::VsmIteration;
use crate::zsl::EvalReport;

pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

pub fn split_path(out: &Path, repeat: usize) -> PathBuf {
    out.join(format!("split_r{repeat}.json"))
}

pub fn seed_path(out: &Path, repeat: usize) -> PathBuf {
    out.join(format!("seed_r{repeat}.json"))
}

pub fn trace_path(trace_dir: &Path, repeat: usize) -> PathBuf {
    trace_dir.join(format!("trace_r{repeat}.jsonl"))
}

/// `tag` is `es` or `ps`; `ext` is `json` or `csv`.
pub fn report_path(out: &Path, tag: &str, repeat: usize, ext: &str) -> PathBuf {
    out.join(format!("report_{tag}_r{repeat}.{ext}"))
}

pub fn rarity_path(out: &Path, repeat: usize, ext: &str) -> PathBuf {
    out.join(format!("rarity_r{repeat}.{ext}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogArtifact {
    pub config_digest: String,
    pub rng_seed: u64,
    pub n_classes: usize,
    pub n_attributes: usize,
    pub n_samples: Option<usize>,
    pub feature_dim: Option<usize>,
    pub avg_images_per_class: f64,
    pub queries_per_iteration: usize,
    pub zero_attribute_columns: Vec<usize>,
    pub attribute_names: Vec<String>,
    pub classes: Vec<ClassInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitArtifact {
    pub config_digest: String,
    pub rng_seed: u64,
    pub repeat: usize,
    pub n_seen_target: usize,
    pub split: SplitDefinition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMember {
    pub class_id: ClassId,
    pub name: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedArtifact {
    pub config_digest: String,
    pub rng_seed: u64,
    pub repeat: usize,
    pub n_z: usize,
    pub members: Vec<SeedMember>,
    /// Class ids of each cluster, in cluster order.
    pub clusters: Vec<Vec<ClassId>>,
    /// `(cluster count, mean silhouette)` for every count tried.
    pub silhouette_sweep: Vec<(usize, f64)>,
    pub seeds: SeedSet,
}

/// One line of a VSM trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub config_digest: String,
    pub rng_seed: u64,
    pub repeat: usize,
    #[serde(flatten)]
    pub iteration: VsmIteration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportArtifact {
    pub config_digest: String,
    pub rng_seed: u64,
    pub repeat: usize,
    pub external_predictions: bool,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredPair {
    pub rare: FilteredReport,
    pub common: FilteredReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RarityArtifact {
    pub config_digest: String,
    pub rng_seed: u64,
    pub repeat: usize,
    pub rare_threshold: f64,
    pub common_threshold: f64,
    pub rare: Vec<String>,
    pub common: Vec<String>,
    pub neither: Vec<String>,
    pub discarded: Vec<String>,
    /// Common unseen classes with a rare (resp. common) attribute.
    pub y_rare: usize,
    pub y_common: usize,
    pub n_common_unseen: usize,
    pub existing: Option<FilteredPair>,
    pub proposed: Option<FilteredPair>,
}

/// Row of the Table-3 style summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaritySummaryRow {
    pub split: usize,
    #[serde(rename = "A_R")]
    pub a_r: usize,
    #[serde(rename = "A_C")]
    pub a_c: usize,
    #[serde(rename = "Y_R")]
    pub y_r: usize,
    #[serde(rename = "Y_C")]
    pub y_c: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub repeat: usize,
    pub rng_seed: u64,
    pub es_all: f64,
    pub ps_all: f64,
    pub es_rare: Option<f64>,
    pub ps_rare: Option<f64>,
    pub es_common: Option<f64>,
    pub ps_common: Option<f64>,
    pub n_seen_proposed: usize,
    pub samples_queried: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracyRow<'a> {
    pub class_id: ClassId,
    pub name: &'a str,
    pub accuracy: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut text = String::new();
    for r in records {
        text.push_str(&serde_json::to_string(r).map_err(|e| Error::json(path, e))?);
        text.push('\n');
    }
    write_text(path, &text)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    write_bytes(path, &bytes)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
