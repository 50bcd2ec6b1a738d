use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use seenselect::pipeline::{
    load_inputs, run_pipeline, run_repeat, stage_eval, stage_ingest, stage_mine, stage_rarity, stage_seed,
    stage_split, with_incomplete_marker, ConfigMap, Inputs, PipelineConfig,
};
use seenselect::{Error, ErrorKind, Result};

/// Seen-class selection and zero-shot split evaluation.
///
/// Settings come from `--config` (a `key = value` file), then `SEENSELECT_*`
/// environment variables, then flags; later sources win.
#[derive(Parser, Debug)]
#[command(name = "seenselect", version)]
struct Cli {
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run a single repeat instead of all of them.
    #[arg(long, global = true)]
    repeat: Option<usize>,
    #[command(flatten)]
    keys: KeyFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Load and check the inputs, write catalog.json.
    Ingest,
    /// Draw the common unseen classes for each repeat.
    Split,
    /// Cluster the domain and pick the seed classes.
    Seed,
    /// Grow the seed set to the target size.
    Mine,
    /// Evaluate the existing and proposed seen sets.
    Eval,
    /// Designate rare/common attributes and filter the reports.
    Rarity,
    /// Every stage, every repeat.
    Run,
}

#[derive(Args, Debug, Default)]
struct KeyFlags {
    #[arg(long, global = true)]
    attributes: Option<String>,
    #[arg(long, global = true)]
    features: Option<String>,
    #[arg(long, global = true)]
    catalog: Option<String>,
    /// `classes,attrs,dim,clusters,rare,images[,seed]`
    #[arg(long, global = true)]
    synthetic: Option<String>,
    #[arg(long, global = true)]
    scale_max: Option<String>,
    #[arg(long, global = true)]
    n_seen: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    repeats: Option<String>,
    #[arg(long, global = true)]
    q: Option<String>,
    #[arg(long, global = true)]
    t: Option<String>,
    #[arg(long, global = true)]
    lr: Option<String>,
    #[arg(long, global = true)]
    epochs: Option<String>,
    #[arg(long, global = true)]
    batch_size: Option<String>,
    #[arg(long, global = true)]
    momentum: Option<String>,
    #[arg(long, global = true)]
    lambda_ec: Option<String>,
    #[arg(long, global = true)]
    gamma: Option<String>,
    #[arg(long, global = true)]
    lambda: Option<String>,
    #[arg(long, global = true)]
    rare_threshold: Option<String>,
    #[arg(long, global = true)]
    common_threshold: Option<String>,
    #[arg(long, global = true)]
    cluster_lower_bound: Option<String>,
    #[arg(long, global = true)]
    es_predictions: Option<String>,
    #[arg(long, global = true)]
    ps_predictions: Option<String>,
    #[arg(long, global = true)]
    out_dir: Option<String>,
    #[arg(long, global = true)]
    trace_dir: Option<String>,
}

impl KeyFlags {
    fn to_map(&self) -> Result<ConfigMap> {
        let pairs = [
            ("attributes", &self.attributes),
            ("features", &self.features),
            ("catalog", &self.catalog),
            ("synthetic", &self.synthetic),
            ("scale-max", &self.scale_max),
            ("n-seen", &self.n_seen),
            ("seed", &self.seed),
            ("repeats", &self.repeats),
            ("q", &self.q),
            ("t", &self.t),
            ("lr", &self.lr),
            ("epochs", &self.epochs),
            ("batch-size", &self.batch_size),
            ("momentum", &self.momentum),
            ("lambda-ec", &self.lambda_ec),
            ("gamma", &self.gamma),
            ("lambda", &self.lambda),
            ("rare-threshold", &self.rare_threshold),
            ("common-threshold", &self.common_threshold),
            ("cluster-lower-bound", &self.cluster_lower_bound),
            ("es-predictions", &self.es_predictions),
            ("ps-predictions", &self.ps_predictions),
            ("out-dir", &self.out_dir),
            ("trace-dir", &self.trace_dir),
        ];
        let mut map = ConfigMap::new();
        for (key, value) in pairs {
            if let Some(v) = value {
                map.set(key, v)?;
            }
        }
        Ok(map)
    }
}

fn resolve(cli: &Cli) -> Result<PipelineConfig> {
    let mut map = match &cli.config {
        Some(path) => ConfigMap::load(path)?,
        None => ConfigMap::new(),
    };
    map.apply_env(std::env::vars())?;
    map.merge(&cli.keys.to_map()?);
    let cfg = PipelineConfig::from_map(&map)?;
    if let Some(r) = cli.repeat {
        if r >= cfg.repeats {
            return Err(Error::Config(format!("repeat {r} is out of range for {} repeats", cfg.repeats)));
        }
    }
    Ok(cfg)
}

fn per_repeat(
    cfg: &PipelineConfig,
    only: Option<usize>,
    inputs: &Inputs,
    mut stage: impl FnMut(&PipelineConfig, &Inputs, usize) -> Result<()>,
) -> Result<()> {
    let repeats: Vec<usize> = match only {
        Some(r) => vec![r],
        None => (0..cfg.repeats).collect(),
    };
    for r in repeats {
        stage(cfg, inputs, r)?;
    }
    Ok(())
}

fn execute(command: Command, cfg: &PipelineConfig, only: Option<usize>) -> Result<()> {
    if matches!(command, Command::Run) && only.is_none() {
        let summary = run_pipeline(cfg)?;
        for row in &summary.accuracy {
            println!(
                "repeat {}: ES {:.4}  PS {:.4}  ({} seen classes, {} samples queried)",
                row.repeat, row.es_all, row.ps_all, row.n_seen_proposed, row.samples_queried
            );
        }
        return Ok(());
    }
    with_incomplete_marker(&cfg.out_dir, || {
        let inputs = load_inputs(cfg)?;
        match command {
            Command::Ingest => {
                let art = stage_ingest(cfg, &inputs)?;
                println!(
                    "{} classes, {} attributes, t = {}",
                    art.n_classes, art.n_attributes, art.queries_per_iteration
                );
                Ok(())
            }
            Command::Split => per_repeat(cfg, only, &inputs, |c, i, r| stage_split(c, i, r).map(drop)),
            Command::Seed => per_repeat(cfg, only, &inputs, |c, i, r| {
                let art = stage_seed(c, i, r)?;
                println!("repeat {r}: {} seed classes", art.n_z);
                Ok(())
            }),
            Command::Mine => per_repeat(cfg, only, &inputs, |c, i, r| {
                let split = stage_mine(c, i, r)?;
                println!("repeat {r}: {} proposed seen classes", split.seen_proposed.len());
                Ok(())
            }),
            Command::Eval => per_repeat(cfg, only, &inputs, |c, i, r| {
                let (es, ps) = stage_eval(c, i, r)?;
                println!(
                    "repeat {r}: ES {:.4}  PS {:.4}",
                    es.mean_per_class_top1, ps.mean_per_class_top1
                );
                Ok(())
            }),
            Command::Rarity => per_repeat(cfg, only, &inputs, |c, i, r| {
                let art = stage_rarity(c, i, r)?;
                println!(
                    "repeat {r}: A_R {}  A_C {}  Y_R {}  Y_C {}",
                    art.rare.len(),
                    art.common.len(),
                    art.y_rare,
                    art.y_common
                );
                Ok(())
            }),
            Command::Run => per_repeat(cfg, only, &inputs, |c, i, r| {
                stage_ingest(c, i)?;
                let (row, _) = run_repeat(c, i, r)?;
                println!("repeat {r}: ES {:.4}  PS {:.4}", row.es_all, row.ps_all);
                Ok(())
            }),
        }
    })
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::DataFormat => 3,
        ErrorKind::Protocol => 4,
        ErrorKind::Numerical => 5,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = resolve(&cli).and_then(|cfg| execute(cli.command, &cfg, cli.repeat));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
