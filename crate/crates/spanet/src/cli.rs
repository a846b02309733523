//! Command-line entry points: generate, train, eval, sweep, inspect.
//! Every run writes its resolved configuration (flags + tool version) next
//! to its outputs so results are reproducible from that file alone.
//!
//! Exit codes (mapped in the binary): 0 success, 1 usage error, 2 data
//! error, 3 numerical failure.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{
    sweep_structured, write_aggregates_csv, write_rows_csv, write_sweep_csv, zero_shot_eval,
};
use crate::geom::{GeometryKind, SweepSchedule};
use crate::nn::checkpoint;
use crate::nn::model::{Head, ModelConfig};
use crate::nn::train::{train, write_log_csv, Hyper};
use crate::pipeline::{generate_dataset, read_records, DatasetSpec, LabelConfig};

fn parse_kind(s: &str) -> std::result::Result<GeometryKind, String> {
    match s {
        "random" => Ok(GeometryKind::Random),
        "linear" => Ok(GeometryKind::Linear),
        "ring" => Ok(GeometryKind::Ring),
        other => Err(format!("unknown kind '{other}' (expected random|linear|ring)")),
    }
}

fn parse_head(s: &str) -> std::result::Result<Head, String> {
    s.parse::<Head>().map_err(|e| e.to_string())
}

#[derive(Parser, Debug, Serialize)]
#[command(name = "spanet", version, about = "Pair-ansatz VQE datasets and angle predictors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
pub enum Command {
    /// Generate (or resume) a labeled JSONL dataset.
    Generate(GenerateArgs),
    /// Train an angle predictor on one or more datasets.
    Train(TrainArgs),
    /// Zero-shot evaluation of a trained model against stored baselines.
    Eval(EvalArgs),
    /// Structured linear/ring distance sweep with baseline and model curves.
    Sweep(SweepArgs),
    /// Validate and pretty-print dataset records.
    Inspect(InspectArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_parser = parse_kind)]
    pub kind: GeometryKind,
    #[arg(long)]
    pub n_atoms: usize,
    /// Number of random instances (random kind only).
    #[arg(long)]
    pub count: Option<usize>,
    /// First seed for random instances.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Random kind: cube side. Linear/ring kinds: sweep upper bound (Å).
    #[arg(long)]
    pub d_max: f64,
    /// Sweep point count (linear/ring kinds).
    #[arg(long = "T")]
    pub t: Option<usize>,
    /// Sweep lower bound in Å (linear/ring kinds).
    #[arg(long)]
    pub d_min: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub no_orbital_opt: bool,
    /// Store E_FCI when the qubit count is at most this (0 disables).
    #[arg(long, default_value_t = 12)]
    pub fci_max_qubits: usize,
    /// Log and skip failed instances instead of aborting.
    #[arg(long)]
    pub keep_going: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct TrainArgs {
    /// Dataset file; repeat to concatenate.
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,
    #[arg(long, value_parser = parse_head, default_value = "mixed")]
    pub head: Head,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub val_fraction: f64,
    #[arg(long, default_value_t = 64)]
    pub feature_dim: usize,
    #[arg(long, default_value_t = 256)]
    pub head_hidden: usize,
    #[arg(long, default_value_t = 0.0)]
    pub weight_decay: f64,
    /// Final learning rate as a fraction of --lr, via linear decay
    /// (1.0 = constant rate).
    #[arg(long, default_value_t = 0.1)]
    pub lr_final_fraction: f64,
    /// Fraction of final epochs averaged into the saved parameters.
    #[arg(long, default_value_t = 0.0)]
    pub tail_average_fraction: f64,
    /// Uniform coordinate jitter (Å) on training inputs.
    #[arg(long, default_value_t = 0.0)]
    pub coord_jitter: f64,
    /// Checkpoint output path (no silent default).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Dataset file; repeat to concatenate.
    #[arg(long, required = true)]
    pub data: Vec<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long, value_parser = parse_kind)]
    pub kind: GeometryKind,
    #[arg(long)]
    pub n_atoms: usize,
    #[arg(long = "T", default_value_t = 36)]
    pub t: usize,
    #[arg(long, default_value_t = 0.5)]
    pub d_min: f64,
    #[arg(long, default_value_t = 4.0)]
    pub d_max: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub no_orbital_opt: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct InspectArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Print at most this many records (all are still validated).
    #[arg(long, default_value_t = 10)]
    pub limit: usize,
}

/// Serialize the resolved invocation next to the outputs.
fn write_run_config<T: Serialize>(dir_or_file: &Path, subcommand: &str, args: &T) -> Result<()> {
    let resolved = serde_json::json!({
        "tool": "spanet",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": subcommand,
        "args": args,
    });
    let path = if dir_or_file.extension().is_some() {
        dir_or_file.with_extension("runconfig.json")
    } else {
        dir_or_file.join("runconfig.json")
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&path, serde_json::to_string_pretty(&resolved)?)?;
    Ok(())
}

fn in_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(job))
        }
        None => Ok(job()),
    }
}

fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    let spec = match args.kind {
        GeometryKind::Random => {
            let count = args
                .count
                .ok_or_else(|| Error::invalid("--count is required for --kind random"))?;
            DatasetSpec::Random {
                n_atoms: args.n_atoms,
                count,
                seed_start: args.seed,
                d_max: args.d_max,
            }
        }
        kind => {
            let points = args
                .t
                .ok_or_else(|| Error::invalid("--T is required for linear/ring kinds"))?;
            let d_min = args
                .d_min
                .ok_or_else(|| Error::invalid("--d-min is required for linear/ring kinds"))?;
            let schedule = SweepSchedule::new(args.n_atoms, points, d_min, args.d_max)?;
            match kind {
                GeometryKind::Linear => DatasetSpec::Linear { schedule },
                _ => DatasetSpec::Ring { schedule },
            }
        }
    };
    let label_cfg = LabelConfig {
        orbital_opt: !args.no_orbital_opt,
        fci_max_qubits: args.fci_max_qubits,
        ..Default::default()
    };
    let report = in_pool(args.workers, || {
        generate_dataset(&[spec], &label_cfg, &args.out, args.keep_going)
    })??;
    write_run_config(&args.out, "generate", args)?;
    println!(
        "wrote {} new records ({} already present, {} failed) to {}",
        report.written,
        report.skipped_existing,
        report.failed,
        args.out.display()
    );
    if report.failed > 0 {
        return Err(Error::Numerical(format!("{} instances failed", report.failed)));
    }
    Ok(())
}

fn read_all(paths: &[PathBuf]) -> Result<Vec<crate::pipeline::DatasetRecord>> {
    let mut records = Vec::new();
    for p in paths {
        let mut batch = read_records(p).map_err(|e| match e {
            Error::Data { msg, line } => {
                Error::Data { msg: format!("{}: {msg}", p.display()), line }
            }
            other => other,
        })?;
        records.append(&mut batch);
    }
    Ok(records)
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let records = read_all(&args.data)?;
    let cfg = ModelConfig {
        head: args.head,
        seed: args.seed,
        feature_dim: args.feature_dim,
        head_hidden: args.head_hidden,
        ..Default::default()
    };
    let hyper = Hyper {
        lr: args.lr,
        batch: args.batch,
        epochs: args.epochs,
        seed: args.seed,
        val_fraction: args.val_fraction,
        weight_decay: args.weight_decay,
        lr_final_fraction: args.lr_final_fraction,
        tail_average_fraction: args.tail_average_fraction,
        coord_jitter: args.coord_jitter,
        ..Default::default()
    };
    let outcome = train(&cfg, &records, &hyper)?;
    checkpoint::save(&args.out, &cfg, &outcome.params)?;
    write_log_csv(&args.out.with_extension("log.csv"), &outcome.log)?;
    write_run_config(&args.out, "train", args)?;
    let last = outcome.log.last().expect("at least one epoch");
    println!(
        "trained {} epochs on {} records; final train loss {:.6e}, val loss {:.6e}; model at {}",
        outcome.log.len(),
        records.len(),
        last.train_loss,
        last.val_loss,
        args.out.display()
    );
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let (cfg, params) = checkpoint::load(&args.model)?;
    let records = read_all(&args.data)?;
    let report = zero_shot_eval(&cfg, &params, &records)?;
    std::fs::create_dir_all(&args.out_dir)?;
    write_rows_csv(&args.out_dir.join("rows.csv"), &report.rows)?;
    write_aggregates_csv(&args.out_dir.join("aggregates.csv"), &report.aggregates)?;
    write_run_config(&args.out_dir, "eval", args)?;
    for a in &report.aggregates {
        println!(
            "n={:2}  ME={:10.3} mEh  MSE={:12.3}  MAE={:10.3} mEh  outliers={}/{}",
            a.n_atoms, a.me_meh, a.mse_meh2, a.mae_meh, a.outliers, a.count
        );
    }
    if report.excluded > 0 {
        eprintln!("{} records excluded (model/circuit mismatch)", report.excluded);
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let (cfg, params) = checkpoint::load(&args.model)?;
    let sched = SweepSchedule::new(args.n_atoms, args.t, args.d_min, args.d_max)?;
    let label_cfg = LabelConfig {
        orbital_opt: !args.no_orbital_opt,
        fci_max_qubits: 0,
        ..Default::default()
    };
    let points = in_pool(args.workers, || {
        sweep_structured(&cfg, &params, args.kind, &sched, &label_cfg)
    })??;
    std::fs::create_dir_all(&args.out_dir)?;
    let out = args
        .out_dir
        .join(format!("sweep_{}_{}.csv", args.kind, args.n_atoms));
    write_sweep_csv(&out, &points)?;
    write_run_config(&args.out_dir, "sweep", args)?;
    let worst = points.iter().map(|p| p.abs_err_meh).fold(0.0, f64::max);
    println!("{} points written to {} (max |err| {:.3} mEh)", points.len(), out.display(), worst);
    Ok(())
}

fn cmd_inspect(args: &InspectArgs) -> Result<()> {
    let records = read_records(&args.data)?;
    let mut bad = 0;
    for (i, r) in records.iter().enumerate() {
        let status = match r.validate() {
            Ok(()) => "ok".to_string(),
            Err(e) => {
                bad += 1;
                format!("INVALID: {e}")
            }
        };
        if i < args.limit {
            let fci = r
                .e_fci_hartree
                .map(|e| format!("{e:.8}"))
                .unwrap_or_else(|| "—".to_string());
            println!(
                "{} n={} seed={} E_SPA={:.8} Eh E_FCI={} converged={} theta={:?} [{}]",
                r.kind,
                r.n_atoms(),
                r.seed,
                r.e_spa_hartree,
                fci,
                r.converged,
                r.theta.iter().map(|t| (t * 1e4).round() / 1e4).collect::<Vec<_>>(),
                status
            );
        }
    }
    println!("{} records, {} invalid", records.len(), bad);
    if bad > 0 {
        return Err(Error::data(format!("{bad} invalid records")));
    }
    Ok(())
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Inspect(args) => cmd_inspect(args),
    }
}

/// Map an error to the documented process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidArgument(_) => 1,
        Error::Data { .. } | Error::Io(_) | Error::Json(_) => 2,
        _ => 3,
    }
}
