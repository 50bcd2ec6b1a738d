//! Binary per-image feature store.
//!
//! Layout (little-endian, no padding):
//! - magic: `DRCF`
//! - version: u32 (= 1)
//! - k: u32 feature dimension
//! - n: u64 record count
//! - n records of (class_id: u32, k × f32)

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 4] = b"DRCF";
pub const FEATURE_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8;

/// Fixed-dimension feature vectors with class labels. Sample ids are record
/// positions in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStore {
    dim: usize,
    labels: Vec<u32>,
    data: Vec<f32>,
}

impl FeatureStore {
    pub fn new(dim: usize, labels: Vec<u32>, data: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Format("feature dimension must be positive".into()));
        }
        if data.len() != labels.len() * dim {
            return Err(Error::Format(format!(
                "{} labels of dimension {dim} need {} values, got {}",
                labels.len(),
                labels.len() * dim,
                data.len()
            )));
        }
        Ok(Self { dim, labels, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn class_of(&self, sample: usize) -> usize {
        self.labels[sample] as usize
    }

    pub fn feature(&self, sample: usize) -> &[f32] {
        &self.data[sample * self.dim..(sample + 1) * self.dim]
    }

    pub fn raw(&self) -> &[f32] {
        &self.data
    }

    pub fn class_counts(&self, n_classes: usize) -> Vec<usize> {
        let mut counts = vec![0; n_classes];
        for &l in &self.labels {
            if let Some(c) = counts.get_mut(l as usize) {
                *c += 1;
            }
        }
        counts
    }

    /// Sample ids grouped by class, ascending within each class.
    pub fn samples_by_class(&self, n_classes: usize) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); n_classes];
        for (i, &l) in self.labels.iter().enumerate() {
            if let Some(g) = groups.get_mut(l as usize) {
                g.push(i);
            }
        }
        groups
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.len() * (4 + 4 * self.dim));
        out.extend_from_slice(FEATURE_MAGIC);
        out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for (i, &label) in self.labels.iter().enumerate() {
            out.extend_from_slice(&label.to_le_bytes());
            for v in self.feature(i) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    /// Parses a feature file image. When `n_classes` is given, every label must
    /// be below it.
    pub fn from_bytes(bytes: &[u8], n_classes: Option<usize>) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!(
                "header needs {HEADER_LEN} bytes, file has {}",
                bytes.len()
            )));
        }
        if &bytes[..4] != FEATURE_MAGIC {
            return Err(Error::Format(format!("bad magic {:?}", &bytes[..4])));
        }
        let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap());
        let version = u32_at(4);
        if version != FEATURE_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let dim = u32_at(8) as usize;
        let n = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
        if dim == 0 {
            return Err(Error::Format("feature dimension must be positive".into()));
        }
        let record = 4 + 4 * dim as u64;
        let expected = n
            .checked_mul(record)
            .and_then(|p| p.checked_add(HEADER_LEN as u64))
            .ok_or_else(|| Error::Format(format!("record count {n} overflows")))?;
        if expected != bytes.len() as u64 {
            return Err(Error::Format(format!(
                "expected {expected} bytes for {n} records of dimension {dim}, found {}",
                bytes.len()
            )));
        }
        let n = n as usize;
        let mut labels = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n * dim);
        for chunk in bytes[HEADER_LEN..].chunks_exact(record as usize) {
            let label = u32::from_le_bytes(chunk[..4].try_into().unwrap());
            if let Some(limit) = n_classes {
                if label as usize >= limit {
                    return Err(Error::Format(format!(
                        "record {} has class id {label}, catalog has {limit} classes",
                        labels.len()
                    )));
                }
            }
            labels.push(label);
            data.extend(
                chunk[4..]
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().unwrap())),
            );
        }
        Self::new(dim, labels, data)
    }
}

pub fn load_feature_store(path: &Path, n_classes: Option<usize>) -> Result<FeatureStore> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    FeatureStore::from_bytes(&bytes, n_classes)
}

pub fn write_feature_store(store: &FeatureStore, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&store.to_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> FeatureStore {
        FeatureStore::new(4, vec![0, 1], (0..8).map(|v| v as f32 * 0.5).collect()).unwrap()
    }

    #[test]
    fn reads_back_two_samples() {
        let bytes = small().to_bytes();
        assert_eq!(bytes.len(), 20 + 2 * (4 + 16));
        let back = FeatureStore::from_bytes(&bytes, Some(2)).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.dim(), 4);
        assert_eq!(back.feature(1), &[2.0, 2.5, 3.0, 3.5]);
    }

    #[test]
    fn truncated_payload_reports_sizes() {
        let mut bytes = small().to_bytes();
        bytes.truncate(bytes.len() - 3);
        let msg = FeatureStore::from_bytes(&bytes, None).unwrap_err().to_string();
        assert!(msg.contains("expected 60 bytes"), "{msg}");
        assert!(msg.contains("found 57"), "{msg}");
    }

    #[test]
    fn bad_magic_and_version() {
        let mut bytes = small().to_bytes();
        bytes[0] = b'X';
        assert!(FeatureStore::from_bytes(&bytes, None).unwrap_err().to_string().contains("magic"));
        let mut bytes = small().to_bytes();
        bytes[4] = 2;
        assert!(FeatureStore::from_bytes(&bytes, None).unwrap_err().to_string().contains("version"));
    }

    #[test]
    fn label_out_of_range() {
        let bytes = small().to_bytes();
        assert!(FeatureStore::from_bytes(&bytes, Some(1)).is_err());
    }

    #[test]
    fn groups_by_class() {
        let s = FeatureStore::new(1, vec![1, 0, 1], vec![0.0; 3]).unwrap();
        assert_eq!(s.samples_by_class(2), vec![vec![1], vec![0, 2]]);
        assert_eq!(s.class_counts(3), vec![1, 2, 0]);
    }
}
