//! Dataset model: class catalog, attribute matrix and per-image features,
//! plus the file formats they are read from and the seeded unseen-set split.

mod attributes;
mod features;
mod sidecar;
mod split;
mod synthetic;

pub use attributes::{load_attribute_matrix, normalize_attributes, write_attribute_matrix, AttributeMatrix};
pub use features::{load_feature_store, write_feature_store, FeatureStore, FEATURE_MAGIC, FEATURE_VERSION};
pub use sidecar::{load_sidecar, write_sidecar};
pub use split::{split_unseen, SplitDefinition};
pub use synthetic::{generate_synthetic, SyntheticConfig, SyntheticData};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense class index; doubles as the row of the class in the attribute matrix.
pub type ClassId = usize;

/// Membership of a class in the predetermined (existing) split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExistingRole {
    Seen,
    Unseen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassInfo {
    pub class_id: ClassId,
    pub name: String,
    pub image_count: u64,
    pub overlaps_pretraining: bool,
    pub existing_role: Option<ExistingRole>,
}

/// Immutable list of classes with dense ids `0..N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCatalog {
    classes: Vec<ClassInfo>,
}

impl ClassCatalog {
    pub fn new(classes: Vec<ClassInfo>) -> Result<Self> {
        for (i, c) in classes.iter().enumerate() {
            if c.class_id != i {
                return Err(Error::Param(format!(
                    "class ids must be dense and ordered: position {i} holds id {}",
                    c.class_id
                )));
            }
        }
        let mut names: Vec<&str> = classes.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Param(format!("duplicate class name {:?}", w[0])));
        }
        Ok(Self { classes })
    }

    /// Catalog built from class names alone. Image counts default to 1.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        Self::new(
            names
                .iter()
                .enumerate()
                .map(|(i, n)| ClassInfo {
                    class_id: i,
                    name: n.as_ref().to_string(),
                    image_count: 1,
                    overlaps_pretraining: false,
                    existing_role: None,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn classes(&self) -> &[ClassInfo] {
        &self.classes
    }

    pub fn get(&self, id: ClassId) -> Option<&ClassInfo> {
        self.classes.get(id)
    }

    pub fn name(&self, id: ClassId) -> &str {
        &self.classes[id].name
    }

    pub fn image_count(&self, id: ClassId) -> u64 {
        self.classes[id].image_count
    }

    pub fn overlaps(&self, id: ClassId) -> bool {
        self.classes[id].overlaps_pretraining
    }

    pub fn id_of(&self, name: &str) -> Option<ClassId> {
        self.classes.iter().position(|c| c.name == name)
    }

    pub fn total_images(&self) -> u64 {
        self.classes.iter().map(|c| c.image_count).sum()
    }

    pub fn avg_images_per_class(&self) -> f64 {
        self.total_images() as f64 / self.classes.len().max(1) as f64
    }

    pub fn existing(&self, role: ExistingRole) -> Vec<ClassId> {
        self.classes
            .iter()
            .filter(|c| c.existing_role == Some(role))
            .map(|c| c.class_id)
            .collect()
    }

    /// Copy of the catalog with image counts replaced by the per-class sample
    /// counts of `store`.
    pub fn with_image_counts(&self, store: &FeatureStore) -> Result<Self> {
        let counts = store.class_counts(self.len());
        let mut classes = self.classes.clone();
        for (c, &n) in classes.iter_mut().zip(&counts) {
            if n == 0 {
                return Err(Error::Format(format!(
                    "class {} ({}) has no samples in the feature store",
                    c.class_id, c.name
                )));
            }
            if c.image_count != n as u64 && c.image_count != 1 {
                log::warn!(
                    "class {}: sidecar image count {} replaced by feature count {}",
                    c.name,
                    c.image_count,
                    n
                );
            }
            c.image_count = n as u64;
        }
        Ok(Self { classes })
    }
}

/// Catalog, normalized attributes and features for one dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub catalog: ClassCatalog,
    pub attributes: AttributeMatrix,
    pub features: FeatureStore,
}

impl Dataset {
    /// Assembles a dataset, checking shapes and writing feature-derived image
    /// counts into the catalog.
    pub fn new(catalog: ClassCatalog, attributes: AttributeMatrix, features: FeatureStore) -> Result<Self> {
        if attributes.n_classes() != catalog.len() {
            return Err(Error::Dimension(format!(
                "attribute matrix has {} rows but catalog has {} classes",
                attributes.n_classes(),
                catalog.len()
            )));
        }
        for (i, name) in attributes.class_names().iter().enumerate() {
            if name != catalog.name(i) {
                return Err(Error::Format(format!(
                    "attribute row {i} is {name:?} but catalog class {i} is {:?}",
                    catalog.name(i)
                )));
            }
        }
        if let Some(bad) = features.labels().iter().find(|&&l| l as usize >= catalog.len()) {
            return Err(Error::Format(format!("feature label {bad} out of range")));
        }
        let catalog = catalog.with_image_counts(&features)?;
        Ok(Self {
            catalog,
            attributes,
            features,
        })
    }
}
