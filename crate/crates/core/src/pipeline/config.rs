//! Pipeline configuration: a `key = value` file, overridden by environment
//! variables (`SEENSELECT_<KEY>`, dashes as underscores), overridden in turn
//! by command-line flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::catalog::SyntheticConfig;
use crate::error::{Error, Result};
use crate::rarity::{DEFAULT_COMMON_THRESHOLD, DEFAULT_RARE_THRESHOLD};
use crate::seedset::DEFAULT_CLUSTER_LOWER_BOUND;
use crate::zsl::EszslHyper;

pub const ENV_PREFIX: &str = "SEENSELECT_";

/// Every key the pipeline understands.
pub const KEYS: &[&str] = &[
    "attributes",
    "features",
    "catalog",
    "synthetic",
    "scale-max",
    "n-seen",
    "seed",
    "repeats",
    "q",
    "t",
    "lr",
    "epochs",
    "batch-size",
    "momentum",
    "lambda-ec",
    "gamma",
    "lambda",
    "rare-threshold",
    "common-threshold",
    "cluster-lower-bound",
    "es-predictions",
    "ps-predictions",
    "out-dir",
    "trace-dir",
];

/// Keys that only steer where outputs go; they do not enter the digest.
const OUTPUT_KEYS: &[&str] = &["out-dir", "trace-dir"];

/// Raw, layered key/value settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap(BTreeMap<String, String>);

impl ConfigMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut map = Self::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                line: idx + 1,
                column: 1,
                message: format!("expected `key = value`, got {line:?}"),
            })?;
            map.set(k.trim(), v.trim())?;
        }
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::Config(format!("unknown config key {key:?}")));
        }
        self.0.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    /// Applies `SEENSELECT_*` variables from `vars`.
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) -> Result<()> {
        for (name, value) in vars {
            let Some(rest) = name.strip_prefix(ENV_PREFIX) else { continue };
            let key = rest.to_ascii_lowercase().replace('_', "-");
            self.set(&key, &value)?;
        }
        Ok(())
    }

    /// Layers `other` on top of `self`.
    pub fn merge(&mut self, other: &ConfigMap) {
        for (k, v) in &other.0 {
            self.0.insert(k.clone(), v.clone());
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub attributes: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    /// Generate the dataset in memory instead of reading files.
    pub synthetic: Option<SyntheticConfig>,
    pub scale_max: f64,
    /// Target seen-set size; defaults to the existing seen-set size.
    pub n_seen: Option<usize>,
    pub seed: u64,
    pub repeats: usize,
    pub q: usize,
    /// Samples queried per iteration; derived from the data when unset.
    pub t: Option<usize>,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub momentum: f64,
    pub lambda_ec: f64,
    pub eszsl: EszslHyper,
    pub rare_threshold: f64,
    pub common_threshold: f64,
    pub cluster_lower_bound: usize,
    pub es_predictions: Option<PathBuf>,
    pub ps_predictions: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub trace_dir: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            attributes: None,
            features: None,
            catalog: None,
            synthetic: None,
            scale_max: 1.0,
            n_seen: None,
            seed: 0,
            repeats: 3,
            q: 2,
            t: None,
            lr: 0.01,
            epochs: 30,
            batch_size: 32,
            momentum: 0.9,
            lambda_ec: 0.5,
            eszsl: EszslHyper::default(),
            rare_threshold: DEFAULT_RARE_THRESHOLD,
            common_threshold: DEFAULT_COMMON_THRESHOLD,
            cluster_lower_bound: DEFAULT_CLUSTER_LOWER_BOUND,
            es_predictions: None,
            ps_predictions: None,
            out_dir: PathBuf::from("out"),
            trace_dir: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

/// `classes,attrs,dim,clusters,rare,images[,seed]`; the seed defaults to the
/// pipeline seed.
fn parse_synthetic(value: &str, default_seed: u64) -> Result<SyntheticConfig> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if !(parts.len() == 6 || parts.len() == 7) {
        return Err(Error::Config(format!(
            "synthetic expects classes,attrs,dim,clusters,rare,images[,seed], got {value:?}"
        )));
    }
    let n = |i: usize| parse_value::<usize>("synthetic", parts[i]);
    Ok(SyntheticConfig {
        n_classes: n(0)?,
        d_attrs: n(1)?,
        k_dim: n(2)?,
        n_clusters: n(3)?,
        rare_attr_count: n(4)?,
        images_per_class: n(5)?,
        rng_seed: match parts.get(6) {
            Some(s) => parse_value("synthetic", s)?,
            None => default_seed,
        },
    })
}

impl PipelineConfig {
    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let mut cfg = Self::default();
        let path = |k: &str| map.get(k).map(PathBuf::from);
        cfg.attributes = path("attributes");
        cfg.features = path("features");
        cfg.catalog = path("catalog");
        cfg.es_predictions = path("es-predictions");
        cfg.ps_predictions = path("ps-predictions");
        cfg.trace_dir = path("trace-dir");
        if let Some(p) = path("out-dir") {
            cfg.out_dir = p;
        }
        macro_rules! num {
            ($key:literal, $field:expr) => {
                if let Some(v) = map.get($key) {
                    $field = parse_value($key, v)?;
                }
            };
        }
        num!("scale-max", cfg.scale_max);
        num!("seed", cfg.seed);
        num!("repeats", cfg.repeats);
        num!("q", cfg.q);
        num!("lr", cfg.lr);
        num!("epochs", cfg.epochs);
        num!("batch-size", cfg.batch_size);
        num!("momentum", cfg.momentum);
        num!("lambda-ec", cfg.lambda_ec);
        num!("gamma", cfg.eszsl.gamma);
        num!("lambda", cfg.eszsl.lambda);
        num!("rare-threshold", cfg.rare_threshold);
        num!("common-threshold", cfg.common_threshold);
        num!("cluster-lower-bound", cfg.cluster_lower_bound);
        if let Some(v) = map.get("n-seen") {
            cfg.n_seen = Some(parse_value("n-seen", v)?);
        }
        if let Some(v) = map.get("t") {
            cfg.t = Some(parse_value("t", v)?);
        }
        if let Some(v) = map.get("synthetic") {
            cfg.synthetic = Some(parse_synthetic(v, cfg.seed)?);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.synthetic.is_none() && self.attributes.is_none() {
            return Err(Error::Config("either `attributes` or `synthetic` must be set".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be at least 1".into()));
        }
        if self.q == 0 || self.t == Some(0) || self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("q, t, epochs and batch-size must be positive".into()));
        }
        if !(self.lr > 0.0 && self.scale_max > 0.0 && self.eszsl.gamma > 0.0 && self.eszsl.lambda > 0.0) {
            return Err(Error::Config("lr, scale-max, gamma and lambda must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.lambda_ec) || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("lambda-ec must lie in [0, 1] and momentum in [0, 1)".into()));
        }
        if self.cluster_lower_bound < 2 {
            return Err(Error::Config("cluster-lower-bound must be at least 2".into()));
        }
        Ok(())
    }

    /// Sorted `key = value` lines of every setting that affects results.
    pub fn canonical(&self) -> String {
        let opt_path = |p: &Option<PathBuf>| p.as_ref().map_or(String::new(), |p| p.display().to_string());
        let mut entries: BTreeMap<&str, String> = BTreeMap::new();
        entries.insert("attributes", opt_path(&self.attributes));
        entries.insert("features", opt_path(&self.features));
        entries.insert("catalog", opt_path(&self.catalog));
        entries.insert(
            "synthetic",
            self.synthetic.map_or(String::new(), |s| {
                format!(
                    "{},{},{},{},{},{},{}",
                    s.n_classes, s.d_attrs, s.k_dim, s.n_clusters, s.rare_attr_count, s.images_per_class, s.rng_seed
                )
            }),
        );
        entries.insert("scale-max", self.scale_max.to_string());
        entries.insert("n-seen", self.n_seen.map_or(String::new(), |v| v.to_string()));
        entries.insert("seed", self.seed.to_string());
        entries.insert("repeats", self.repeats.to_string());
        entries.insert("q", self.q.to_string());
        entries.insert("t", self.t.map_or(String::new(), |v| v.to_string()));
        entries.insert("lr", self.lr.to_string());
        entries.insert("epochs", self.epochs.to_string());
        entries.insert("batch-size", self.batch_size.to_string());
        entries.insert("momentum", self.momentum.to_string());
        entries.insert("lambda-ec", self.lambda_ec.to_string());
        entries.insert("gamma", self.eszsl.gamma.to_string());
        entries.insert("lambda", self.eszsl.lambda.to_string());
        entries.insert("rare-threshold", self.rare_threshold.to_string());
        entries.insert("common-threshold", self.common_threshold.to_string());
        entries.insert("cluster-lower-bound", self.cluster_lower_bound.to_string());
        entries.insert("es-predictions", opt_path(&self.es_predictions));
        entries.insert("ps-predictions", opt_path(&self.ps_predictions));
        debug_assert!(entries.keys().all(|k| KEYS.contains(k) && !OUTPUT_KEYS.contains(k)));
        let mut out = String::new();
        for (k, v) in entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }

    pub fn trace_dir(&self) -> &Path {
        self.trace_dir.as_deref().unwrap_or(&self.out_dir)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layering_order() {
        let mut file = ConfigMap::parse("synthetic = 40,20,16,5,3,30\nq = 3\nlr = 0.1\n", Path::new("c")).unwrap();
        file.apply_env(vec![
            ("SEENSELECT_Q".to_string(), "4".to_string()),
            ("SEENSELECT_LAMBDA_EC".to_string(), "0.25".to_string()),
            ("OTHER".to_string(), "x".to_string()),
        ])
        .unwrap();
        let mut flags = ConfigMap::new();
        flags.set("q", "5").unwrap();
        file.merge(&flags);
        let cfg = PipelineConfig::from_map(&file).unwrap();
        assert_eq!(cfg.q, 5);
        assert_eq!(cfg.lambda_ec, 0.25);
        assert_eq!(cfg.lr, 0.1);
        assert_eq!(cfg.synthetic.unwrap().rng_seed, 0);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(ConfigMap::parse("bogus = 1\n", Path::new("c")).is_err());
    }

    #[test]
    fn bad_value_is_config_error() {
        let map = ConfigMap::parse("synthetic = 40,20,16,5,3,30\nq = two\n", Path::new("c")).unwrap();
        assert!(matches!(PipelineConfig::from_map(&map), Err(Error::Config(_))));
    }

    #[test]
    fn digest_ignores_output_locations() {
        let mut a = ConfigMap::parse("synthetic = 40,20,16,5,3,30\n", Path::new("c")).unwrap();
        let d1 = PipelineConfig::from_map(&a).unwrap().digest();
        a.set("out-dir", "/tmp/elsewhere").unwrap();
        let d2 = PipelineConfig::from_map(&a).unwrap().digest();
        a.set("q", "3").unwrap();
        let d3 = PipelineConfig::from_map(&a).unwrap().digest();
        assert_eq!(d1, d2);
        assert_ne!(d1, d3);
    }
}
