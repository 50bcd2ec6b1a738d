//! End-to-end orchestration. Each stage reads the artifacts of the previous
//! one from the output directory, so stages can be re-run independently.

mod artifacts;
mod config;

pub use artifacts::*;
pub use config::{ConfigMap, PipelineConfig, ENV_PREFIX, KEYS};

use std::fs;
use std::path::Path;

use crate::catalog::{
    generate_synthetic, load_attribute_matrix, load_feature_store, load_sidecar, normalize_attributes, AttributeMatrix,
    ClassCatalog, ClassId, Dataset, ExistingRole, SplitDefinition,
};
use crate::error::{Error, Result};
use crate::rarity::{classes_exhibiting, designate_rare_common, rare_filtered_report, RarityDesignation, RarityMode};
use crate::seedset::build_seed_set;
use crate::vsm::{compute_t, run_vsm, VsmConfig};
use crate::zsl::{evaluate_split, load_external_predictions, EvalReport, SplitTag};

/// Loaded inputs. Features are optional so attribute-only stages (ingest,
/// split, seed, rarity designation) run without them.
#[derive(Debug, Clone)]
pub enum Inputs {
    Full(Dataset),
    AttributesOnly {
        catalog: ClassCatalog,
        attributes: AttributeMatrix,
    },
}

impl Inputs {
    pub fn catalog(&self) -> &ClassCatalog {
        match self {
            Inputs::Full(d) => &d.catalog,
            Inputs::AttributesOnly { catalog, .. } => catalog,
        }
    }

    pub fn attributes(&self) -> &AttributeMatrix {
        match self {
            Inputs::Full(d) => &d.attributes,
            Inputs::AttributesOnly { attributes, .. } => attributes,
        }
    }

    pub fn dataset(&self) -> Result<&Dataset> {
        match self {
            Inputs::Full(d) => Ok(d),
            Inputs::AttributesOnly { .. } => Err(Error::Config("this stage needs `features`".into())),
        }
    }
}

pub fn load_inputs(cfg: &PipelineConfig) -> Result<Inputs> {
    if let Some(syn) = &cfg.synthetic {
        return Ok(Inputs::Full(generate_synthetic(syn)?.dataset));
    }
    let path = cfg
        .attributes
        .as_deref()
        .ok_or_else(|| Error::Config("`attributes` is not set".into()))?;
    let attributes = normalize_attributes(&load_attribute_matrix(path)?, cfg.scale_max)?;
    let catalog = match &cfg.catalog {
        Some(p) => load_sidecar(p)?,
        None => {
            log::warn!("no catalog sidecar: image counts default to 1 and no existing split is known");
            ClassCatalog::from_names(attributes.class_names())?
        }
    };
    match &cfg.features {
        Some(p) => {
            let store = load_feature_store(p, Some(catalog.len()))?;
            Ok(Inputs::Full(Dataset::new(catalog, attributes, store)?))
        }
        None => {
            if attributes.n_classes() != catalog.len()
                || attributes.class_names().iter().zip(catalog.classes()).any(|(a, c)| *a != c.name)
            {
                return Err(Error::Format(
                    "attribute rows and catalog classes differ in count or order".into(),
                ));
            }
            Ok(Inputs::AttributesOnly { catalog, attributes })
        }
    }
}

/// Seen-set target size: configured, or the existing seen-set size.
pub fn n_seen_target(cfg: &PipelineConfig, catalog: &ClassCatalog) -> usize {
    cfg.n_seen.unwrap_or_else(|| catalog.existing(ExistingRole::Seen).len())
}

pub fn queries_per_iteration(cfg: &PipelineConfig, catalog: &ClassCatalog) -> usize {
    cfg.t.unwrap_or_else(|| compute_t(catalog.avg_images_per_class()))
}

pub fn vsm_config(cfg: &PipelineConfig, catalog: &ClassCatalog, rng_seed: u64) -> VsmConfig {
    VsmConfig {
        q: cfg.q,
        t: queries_per_iteration(cfg, catalog),
        lr: cfg.lr,
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        momentum: cfg.momentum,
        lambda_ec: cfg.lambda_ec,
        rng_seed,
    }
}

fn repeat_seed(cfg: &PipelineConfig, repeat: usize) -> u64 {
    cfg.seed.wrapping_add(repeat as u64)
}

fn check_digest(found: &str, cfg: &PipelineConfig, path: &Path) {
    if found != cfg.digest() {
        log::warn!("{} was written under a different configuration", path.display());
    }
}

fn load_split(cfg: &PipelineConfig, repeat: usize) -> Result<SplitArtifact> {
    let path = split_path(&cfg.out_dir, repeat);
    let art: SplitArtifact = read_json(&path)?;
    check_digest(&art.config_digest, cfg, &path);
    art.split.validate()?;
    Ok(art)
}

pub fn stage_ingest(cfg: &PipelineConfig, inputs: &Inputs) -> Result<CatalogArtifact> {
    let catalog = inputs.catalog();
    let attributes = inputs.attributes();
    let features = inputs.dataset().ok().map(|d| &d.features);
    let zero = attributes.zero_columns();
    if !zero.is_empty() {
        log::warn!("{} attribute columns are zero for every class", zero.len());
    }
    let art = CatalogArtifact {
        config_digest: cfg.digest(),
        rng_seed: cfg.seed,
        n_classes: catalog.len(),
        n_attributes: attributes.n_attributes(),
        n_samples: features.map(|f| f.len()),
        feature_dim: features.map(|f| f.dim()),
        avg_images_per_class: catalog.avg_images_per_class(),
        queries_per_iteration: queries_per_iteration(cfg, catalog),
        zero_attribute_columns: zero,
        attribute_names: attributes.attribute_names().to_vec(),
        classes: catalog.classes().to_vec(),
    };
    write_json(&cfg.out_dir.join("catalog.json"), &art)?;
    Ok(art)
}

pub fn stage_split(cfg: &PipelineConfig, inputs: &Inputs, repeat: usize) -> Result<SplitDefinition> {
    let catalog = inputs.catalog();
    let seen = catalog.existing(ExistingRole::Seen);
    let unseen = catalog.existing(ExistingRole::Unseen);
    if seen.is_empty() || unseen.is_empty() {
        return Err(Error::Config(
            "the catalog defines no existing seen/unseen split (set `split = seen|unseen` in the sidecar)".into(),
        ));
    }
    let split = SplitDefinition::from_existing(&seen, &unseen, repeat_seed(cfg, repeat))?;
    let target = n_seen_target(cfg, catalog);
    let domain = split.domain().len();
    if target == 0 || target >= domain {
        return Err(Error::Config(format!(
            "seen-set target {target} must lie in [1, {domain}) for a domain of {domain} classes"
        )));
    }
    write_json(
        &split_path(&cfg.out_dir, repeat),
        &SplitArtifact {
            config_digest: cfg.digest(),
            rng_seed: split.rng_seed,
            repeat,
            n_seen_target: target,
            split: split.clone(),
        },
    )?;
    Ok(split)
}

pub fn stage_seed(cfg: &PipelineConfig, inputs: &Inputs, repeat: usize) -> Result<SeedArtifact> {
    let split = load_split(cfg, repeat)?;
    let catalog = inputs.catalog();
    let stage = build_seed_set(inputs.attributes(), &split.split.domain(), cfg.cluster_lower_bound)?;
    let partition = &stage.clustering.partition;
    let art = SeedArtifact {
        config_digest: cfg.digest(),
        rng_seed: split.rng_seed,
        repeat,
        n_z: stage.seeds.len(),
        members: stage
            .seeds
            .members()
            .iter()
            .zip(stage.seeds.provenance())
            .map(|(&class_id, &provenance)| SeedMember {
                class_id,
                name: catalog.name(class_id).to_string(),
                provenance,
            })
            .collect(),
        clusters: (0..partition.n_clusters).map(|j| partition.members(j)).collect(),
        silhouette_sweep: stage.clustering.sweep.clone(),
        seeds: stage.seeds,
    };
    write_json(&seed_path(&cfg.out_dir, repeat), &art)?;
    Ok(art)
}

/// Grows the seed set to the target, writes the trace and records the
/// proposed seen set in the split artifact.
pub fn stage_mine(cfg: &PipelineConfig, inputs: &Inputs, repeat: usize) -> Result<SplitDefinition> {
    let dataset = inputs.dataset()?;
    let mut split = load_split(cfg, repeat)?;
    let seed_file = seed_path(&cfg.out_dir, repeat);
    let seed: SeedArtifact = read_json(&seed_file)?;
    check_digest(&seed.config_digest, cfg, &seed_file);
    let digest = cfg.digest();
    let vcfg = vsm_config(cfg, &dataset.catalog, split.rng_seed);
    let (z, trace) = run_vsm(&seed.seeds, dataset, &split.split.domain(), &vcfg, split.n_seen_target)?;
    let records: Vec<TraceRecord> = trace
        .iterations
        .into_iter()
        .map(|iteration| TraceRecord {
            config_digest: digest.clone(),
            rng_seed: split.rng_seed,
            repeat,
            iteration,
        })
        .collect();
    write_jsonl(&trace_path(cfg.trace_dir(), repeat), &records)?;

    let mut proposed = z.members().to_vec();
    proposed.sort_unstable();
    split.split.seen_proposed = proposed;
    split.split.validate()?;
    split.config_digest = digest;
    write_json(&split_path(&cfg.out_dir, repeat), &split)?;
    Ok(split.split)
}

/// ES and PS reports on the common unseen classes.
pub fn stage_eval(cfg: &PipelineConfig, inputs: &Inputs, repeat: usize) -> Result<(EvalReport, EvalReport)> {
    let dataset = inputs.dataset()?;
    let split = load_split(cfg, repeat)?;
    if split.split.seen_proposed.is_empty() {
        return Err(Error::Protocol(format!(
            "repeat {repeat} has no proposed seen set yet; run `mine` first"
        )));
    }
    let mut out = Vec::with_capacity(2);
    for (tag, label, external) in [
        (SplitTag::Existing, "es", &cfg.es_predictions),
        (SplitTag::Proposed, "ps", &cfg.ps_predictions),
    ] {
        let preds = external.as_deref().map(load_external_predictions).transpose()?;
        let report = evaluate_split(&split.split, tag, dataset, cfg.eszsl, preds.as_deref())?;
        write_json(
            &report_path(&cfg.out_dir, label, repeat, "json"),
            &ReportArtifact {
                config_digest: cfg.digest(),
                rng_seed: split.rng_seed,
                repeat,
                external_predictions: preds.is_some(),
                report: report.clone(),
            },
        )?;
        let rows: Vec<ClassAccuracyRow> = report
            .per_class
            .iter()
            .map(|c| ClassAccuracyRow {
                class_id: c.class_id,
                name: dataset.catalog.name(c.class_id),
                accuracy: c.accuracy,
            })
            .collect();
        write_csv(&report_path(&cfg.out_dir, label, repeat, "csv"), &rows)?;
        out.push(report);
    }
    let ps = out.pop().expect("two reports");
    let es = out.pop().expect("two reports");
    Ok((es, ps))
}

/// Rare/common designation over the repeat's domain, plus rare- and
/// common-filtered versions of whatever reports exist for the repeat.
pub fn stage_rarity(cfg: &PipelineConfig, inputs: &Inputs, repeat: usize) -> Result<RarityArtifact> {
    let split = load_split(cfg, repeat)?;
    let attributes = inputs.attributes();
    let designation = designate_rare_common(
        &attributes.rows(&split.split.domain()),
        cfg.rare_threshold,
        cfg.common_threshold,
    );
    let names = |ids: &[usize]| -> Vec<String> { ids.iter().map(|&a| attributes.attribute_names()[a].clone()).collect() };
    let filtered = |label: &str| -> Result<Option<FilteredPair>> {
        let path = report_path(&cfg.out_dir, label, repeat, "json");
        if !path.exists() {
            return Ok(None);
        }
        let art: ReportArtifact = read_json(&path)?;
        check_digest(&art.config_digest, cfg, &path);
        Ok(Some(filter_pair(&art.report, &designation, attributes)))
    };
    let common_unseen = &split.split.common_unseen;
    let art = RarityArtifact {
        config_digest: cfg.digest(),
        rng_seed: split.rng_seed,
        repeat,
        rare_threshold: cfg.rare_threshold,
        common_threshold: cfg.common_threshold,
        rare: names(&designation.rare),
        common: names(&designation.common),
        neither: names(&designation.neither),
        discarded: names(&designation.discarded),
        y_rare: classes_exhibiting(attributes, common_unseen, &designation.rare).len(),
        y_common: classes_exhibiting(attributes, common_unseen, &designation.common).len(),
        n_common_unseen: common_unseen.len(),
        existing: filtered("es")?,
        proposed: filtered("ps")?,
    };
    write_json(&rarity_path(&cfg.out_dir, repeat, "json"), &art)?;
    write_csv(&rarity_path(&cfg.out_dir, repeat, "csv"), &[summary_row(&art)])?;
    Ok(art)
}

pub fn filter_pair(report: &EvalReport, designation: &RarityDesignation, attributes: &AttributeMatrix) -> FilteredPair {
    FilteredPair {
        rare: rare_filtered_report(report, designation, attributes, RarityMode::Rare),
        common: rare_filtered_report(report, designation, attributes, RarityMode::Common),
    }
}

fn summary_row(art: &RarityArtifact) -> RaritySummaryRow {
    RaritySummaryRow {
        split: art.repeat,
        a_r: art.rare.len(),
        a_c: art.common.len(),
        y_r: art.y_rare,
        y_c: art.y_common,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub accuracy: Vec<AccuracyRow>,
    pub rarity: Vec<RaritySummaryRow>,
}

/// All stages for one repeat.
pub fn run_repeat(cfg: &PipelineConfig, inputs: &Inputs, repeat: usize) -> Result<(AccuracyRow, RaritySummaryRow)> {
    let split = stage_split(cfg, inputs, repeat)?;
    let seed = stage_seed(cfg, inputs, repeat)?;
    log::info!("repeat {repeat}: {} seed classes", seed.n_z);
    let mined = stage_mine(cfg, inputs, repeat)?;
    let (es, ps) = stage_eval(cfg, inputs, repeat)?;
    log::info!(
        "repeat {repeat}: ES {:.4}, PS {:.4} mean per-class top-1",
        es.mean_per_class_top1,
        ps.mean_per_class_top1
    );
    let rarity = stage_rarity(cfg, inputs, repeat)?;
    let pick = |p: &Option<FilteredPair>, rare: bool| {
        p.as_ref().and_then(|p| if rare { p.rare.mean() } else { p.common.mean() })
    };
    let queried = trace_total(cfg, repeat)?;
    let row = AccuracyRow {
        repeat,
        rng_seed: split.rng_seed,
        es_all: es.mean_per_class_top1,
        ps_all: ps.mean_per_class_top1,
        es_rare: pick(&rarity.existing, true),
        ps_rare: pick(&rarity.proposed, true),
        es_common: pick(&rarity.existing, false),
        ps_common: pick(&rarity.proposed, false),
        n_seen_proposed: mined.seen_proposed.len(),
        samples_queried: queried,
    };
    Ok((row, summary_row(&rarity)))
}

fn trace_total(cfg: &PipelineConfig, repeat: usize) -> Result<usize> {
    let path = trace_path(cfg.trace_dir(), repeat);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut total = 0;
    for line in text.lines().filter(|l| !l.is_empty()) {
        let rec: TraceRecord = serde_json::from_str(line).map_err(|e| Error::json(&path, e))?;
        total = rec.iteration.cumulative_queried;
    }
    Ok(total)
}

/// Runs every repeat and writes `summary.csv` and `rarity_summary.csv`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunSummary> {
    with_incomplete_marker(&cfg.out_dir, || {
        let inputs = load_inputs(cfg)?;
        stage_ingest(cfg, &inputs)?;
        let mut accuracy = Vec::with_capacity(cfg.repeats);
        let mut rarity = Vec::with_capacity(cfg.repeats);
        let mut seen_common: Vec<Vec<ClassId>> = Vec::new();
        for repeat in 0..cfg.repeats {
            let (acc, rar) = run_repeat(cfg, &inputs, repeat)?;
            let split = load_split(cfg, repeat)?.split;
            if let Some(prev) = seen_common.iter().position(|c| *c == split.common_unseen) {
                log::warn!("repeat {repeat} drew the same common unseen set as repeat {prev}");
            }
            seen_common.push(split.common_unseen);
            accuracy.push(acc);
            rarity.push(rar);
        }
        write_csv(&cfg.out_dir.join("summary.csv"), &accuracy)?;
        write_csv(&cfg.out_dir.join("rarity_summary.csv"), &rarity)?;
        Ok(RunSummary { accuracy, rarity })
    })
}

/// Runs `f`, leaving an `INCOMPLETE` marker with the error in `out_dir` when
/// it fails and clearing a stale marker when it succeeds.
pub fn with_incomplete_marker<T>(out_dir: &Path, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let marker = out_dir.join(INCOMPLETE_MARKER);
    match f() {
        Ok(v) => {
            if marker.exists() {
                fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
            }
            Ok(v)
        }
        Err(e) => {
            if let Err(w) = write_text(&marker, &format!("{e}\n")) {
                log::error!("could not write {}: {w}", marker.display());
            }
            Err(e)
        }
    }
}
