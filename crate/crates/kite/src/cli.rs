//! Command-line interface.
//!
//! Settings come from, in decreasing precedence: explicit flags, the JSON
//! file given with `--config`, built-in defaults.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use kite_core::random_features::InitScheme;
use kite_core::{seed, Warning};
use serde::Serialize;

use crate::config::{RandomKind, RunConfig};
use crate::error::exit;
use crate::eval::{load_target, rank_models, Benchmark};
use crate::format::read_features;
use crate::manifest::load_manifest;
use crate::runner::{random_features, score_probe};
use crate::synth_io::{easy_task, hard_task, write_gaussian, write_zoo, SuiteTask, ZooSummary, HARD_CLASSES, HARD_SEPARATION};
use crate::{Error, Result, VERSION};

#[derive(Debug, Parser)]
#[command(name = "kite", version = VERSION, about = "Kernel-alignment transferability estimation")]
pub struct Cli {
    /// Worker threads for scoring models.
    #[arg(long, global = true, env = "KITE_JOBS")]
    pub jobs: Option<usize>,
    /// JSON run configuration; explicit flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score one model's probe features.
    Score(ScoreArgs),
    /// Rank the models of a manifest on one target.
    Rank(RankArgs),
    /// Correlate estimator scores with ground truth over a benchmark.
    Eval(EvalArgs),
    /// Generate synthetic data and model zoos.
    #[command(subcommand)]
    Synth(SynthCommand),
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// linear, gaussian[:SIGMA], gaussian-unsquared[:SIGMA] or laplacian[:SIGMA]
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub pca_dim: Option<usize>,
    #[arg(long)]
    pub probe_size: Option<usize>,
    /// Weight of RA in a bare `lincomb`.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Neighbours for a bare `knn`.
    #[arg(long)]
    pub knn_k: Option<usize>,
    /// xavier-normal, he-normal or he-uniform
    #[arg(long)]
    pub init: Option<String>,
    /// mlp or gaussian
    #[arg(long)]
    pub random_kind: Option<String>,
    /// Random networks averaged per seed.
    #[arg(long)]
    pub random_nets: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub hidden_widths: Option<Vec<usize>>,
    #[arg(long, alias = "seed", value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Probe features of the model.
    #[arg(long)]
    pub features: PathBuf,
    /// File whose labels to use; defaults to the labels stored with --features.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Precomputed random features of the probe.
    #[arg(long, conflicts_with = "raw")]
    pub random: Option<PathBuf>,
    /// Raw probe inputs to build random features from.
    #[arg(long)]
    pub raw: Option<PathBuf>,
    #[arg(long, default_value = "kite")]
    pub estimator: String,
    #[arg(long)]
    pub layers: Option<u64>,
    #[arg(long)]
    pub source_size: Option<u64>,
    /// Write the JSON record here instead of stdout.
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Raw inputs of the target pool, with labels unless --target-labels is given.
    #[arg(long)]
    pub target_features: PathBuf,
    #[arg(long)]
    pub target_labels: Option<PathBuf>,
    /// Substituted for {target} in manifest paths; defaults to the file stem.
    #[arg(long)]
    pub target_id: Option<String>,
    #[arg(long)]
    pub estimator: Option<String>,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub targets: PathBuf,
    #[arg(long)]
    pub ground_truth: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    /// Directory for eval.json, eval.csv, summary.csv and scores.csv.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Two unit-variance Gaussian classes.
    Gaussian {
        #[arg(long)]
        sep: f64,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// A zoo of models of graded quality on easy and hard tasks.
    Zoo {
        #[arg(long, default_value_t = 8)]
        models: usize,
        /// Any of easy, hard.
        #[arg(long, value_delimiter = ',', default_value = "easy,hard")]
        tasks: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// A zoo on one many-class, low-separation task.
    Hard {
        #[arg(long, default_value_t = HARD_CLASSES)]
        classes: usize,
        #[arg(long, default_value_t = HARD_SEPARATION)]
        sep: f64,
        #[arg(long, default_value_t = 8)]
        models: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn config_error(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

/// Merges flags over the config file over defaults.
pub fn build_config(
    file: Option<&Path>,
    run: &RunArgs,
    estimators: Option<Vec<String>>,
    output: Option<PathBuf>,
) -> Result<RunConfig> {
    let mut c = match file {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = &run.kernel {
        c.kernel = v.clone();
    }
    if let Some(v) = run.pca_dim {
        c.pca_dim = v;
    }
    if let Some(v) = run.probe_size {
        c.probe_size = v;
    }
    if let Some(v) = run.lambda {
        c.lambda = v;
    }
    if let Some(v) = run.knn_k {
        c.knn_k = v;
    }
    if let Some(v) = &run.init {
        c.random_net.init = v.parse::<InitScheme>().map_err(config_error)?;
    }
    if let Some(v) = &run.random_kind {
        c.random_net.kind = match v.as_str() {
            "mlp" => RandomKind::Mlp,
            "gaussian" => RandomKind::Gaussian,
            _ => return Err(Error::Config(format!("unknown random kind `{v}`"))),
        };
    }
    if let Some(v) = run.random_nets {
        c.random_net.num_seeds = v;
    }
    if let Some(v) = &run.hidden_widths {
        c.random_net.hidden_widths = v.clone();
    }
    if let Some(v) = &run.seeds {
        c.seeds = v.clone();
    }
    if let Some(v) = estimators {
        c.estimators = v;
    }
    if output.is_some() {
        c.output = output;
    }
    c.resolve()?;
    Ok(c)
}

#[derive(Debug, Serialize)]
pub struct ScoreRecord {
    pub version: String,
    pub config: RunConfig,
    pub estimator: String,
    pub score: f64,
    pub n: usize,
    pub d: usize,
    /// Wall-clock scoring time, file IO excluded.
    pub time_ms: f64,
    pub warnings: Vec<Warning>,
}

fn cmd_score(cli: &Cli, a: &ScoreArgs) -> Result<u8> {
    let cfg = build_config(cli.config.as_deref(), &a.run, Some(vec![a.estimator.clone()]), a.json.clone())?;
    let resolved = cfg.resolve()?;
    let file = read_features(&a.features)?;
    let labels = match &a.labels {
        Some(p) => Some(
            read_features(p)?.labels.ok_or_else(|| Error::Schema(format!("{} has no labels", p.display())))?,
        ),
        None => file.labels.clone(),
    };
    let random = match &a.random {
        Some(p) => Some(read_features(p)?.features),
        None => None,
    };
    let raw = match &a.raw {
        Some(p) => Some(read_features(p)?.features),
        None => None,
    };
    let n = file.features.rows();
    let meta = match (a.layers, a.source_size) {
        (Some(l), Some(s)) => Some(kite_core::estimators::ModelMeta::new(l, s, n as u64)?),
        _ => None,
    };

    let start = Instant::now();
    let mut warnings = Vec::new();
    let random = match (random, raw) {
        (Some(r), _) => {
            let (r, w) = kite_core::preprocess::reduce(&r, resolved.pca_dim)?;
            warnings.extend(w);
            Some(r)
        }
        (None, Some(raw)) => {
            let seed = seed::derive(resolved.seeds[0], "random");
            let (r, w) = random_features(&raw, file.features.cols(), &resolved, seed)?;
            warnings.extend(w);
            Some(r)
        }
        (None, None) => None,
    };
    let (scores, w) = score_probe(&file.features, labels.as_ref(), random.as_ref(), meta, &resolved)?;
    let time_ms = start.elapsed().as_secs_f64() * 1e3;
    warnings.extend(w);

    let record = ScoreRecord {
        version: VERSION.into(),
        estimator: crate::runner::estimator_names(&resolved.estimators).remove(0),
        config: cfg,
        score: scores[0],
        n,
        d: file.features.cols(),
        time_ms,
        warnings,
    };
    println!("{}", record.score);
    let json = serde_json::to_string_pretty(&record).expect("record serialises");
    match &a.json {
        Some(p) => std::fs::write(p, json + "\n").map_err(|e| Error::io(p, e))?,
        None => println!("{json}"),
    }
    Ok(exit::OK)
}

fn report_failures(failures: &[crate::eval::Failure]) -> u8 {
    for f in failures {
        eprintln!("failed: model {} on target {} (seed {}): {}", f.model_id, f.target_id, f.seed, f.error);
    }
    if failures.is_empty() {
        exit::OK
    } else {
        exit::PARTIAL
    }
}

fn cmd_rank(cli: &Cli, a: &RankArgs) -> Result<u8> {
    let cfg = build_config(cli.config.as_deref(), &a.run, a.estimator.clone().map(|e| vec![e]), a.out.clone())?;
    let manifest = load_manifest(&a.manifest)?;
    let id = match &a.target_id {
        Some(id) => id.clone(),
        None => a
            .target_features
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::Config("cannot derive a target id, pass --target-id".into()))?
            .to_string(),
    };
    let mut target = match &a.target_labels {
        None => load_target(&id, &a.target_features)?,
        Some(p) => {
            let raw = read_features(&a.target_features)?.features;
            crate::runner::Target { id: id.clone(), raw, labels: load_target(&id, p)?.labels }
        }
    };
    target.id = id;
    let out = rank_models(&manifest, &target, &cfg)?;
    print!("{}", out.to_csv());
    if let Some(p) = &a.out {
        std::fs::write(p, out.to_json()).map_err(|e| Error::io(p, e))?;
    }
    Ok(report_failures(&out.failures))
}

fn cmd_eval(cli: &Cli, a: &EvalArgs) -> Result<u8> {
    let cfg = build_config(cli.config.as_deref(), &a.run, a.estimators.clone(), a.out.clone())?;
    let bench = Benchmark::load(&a.manifest, &a.targets, &a.ground_truth)?;
    let out = bench.evaluate(&cfg)?;
    match &a.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            for (name, text) in [
                ("eval.json", out.to_json()),
                ("eval.csv", out.to_csv()),
                ("summary.csv", out.summary_csv()),
                ("scores.csv", out.scores_csv()),
            ] {
                let p = dir.join(name);
                std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
            }
            print!("{}", out.summary_csv());
        }
        None => print!("{}", out.to_json()),
    }
    Ok(report_failures(&out.failures))
}

fn print_zoo(summary: &ZooSummary) {
    println!("wrote {} models to {}", summary.models.len(), summary.dir.display());
    for m in &summary.models {
        let acc: Vec<String> = m.accuracy.iter().map(|(t, a)| format!("{t}={a:.4}")).collect();
        println!("{}  q={:.3}  {}", m.model_id, m.quality, acc.join("  "));
    }
}

fn cmd_synth(c: &SynthCommand) -> Result<u8> {
    match c {
        SynthCommand::Gaussian { sep, n, dim, seed, out } => {
            write_gaussian(out, *sep, *n, *dim, *seed)?;
            println!("wrote {n} samples, separation {sep}, to {}", out.display());
        }
        SynthCommand::Zoo { models, tasks, seed, out } => {
            let suite = tasks
                .iter()
                .map(|t| match t.as_str() {
                    "easy" => Ok(easy_task(*seed)),
                    "hard" => Ok(hard_task(HARD_CLASSES, HARD_SEPARATION, *seed)),
                    _ => Err(Error::Config(format!("unknown task `{t}`, expected easy or hard"))),
                })
                .collect::<Result<Vec<SuiteTask>>>()?;
            print_zoo(&write_zoo(out, &suite, *models, *seed)?);
        }
        SynthCommand::Hard { classes, sep, models, seed, out } => {
            print_zoo(&write_zoo(out, &[hard_task(*classes, *sep, *seed)], *models, *seed)?);
        }
    }
    Ok(exit::OK)
}

fn dispatch(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Score(a) => cmd_score(cli, a),
        Command::Rank(a) => cmd_rank(cli, a),
        Command::Eval(a) => cmd_eval(cli, a),
        Command::Synth(c) => cmd_synth(c),
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> u8 {
    let jobs = match cli.jobs {
        Some(0) => {
            eprintln!("error: --jobs must be at least 1");
            return exit::CONFIG;
        }
        Some(j) => j,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::CONFIG;
        }
    };
    match pool.install(|| dispatch(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
