//! The `sparsa` command line: simulation studies, fitting, prediction, and
//! leave-one-out evaluation on CSV datasets.
//!
//! Dataset format: one sample per row, first column the class label ("1" or
//! "2"), remaining columns numeric features; an optional header row is
//! detected by a non-numeric first cell. `--transpose` accepts the
//! genes-in-rows layout common in expression data (first row holds the
//! labels, an optional leading name column is detected the same way).
//!
//! Every run writes `resolved_config.json` (the full configuration it ran
//! with) and `run_meta.json` (timestamp and runtime, kept out of the data
//! files so identical seeds give byte-identical reports). Exit codes:
//! 0 success, 1 runtime or data error, 2 usage error.

mod io;

use crate::linalg::RngSeed;
use crate::pipeline::{FitConfig, FittedPipeline, LoocvPipeline};
use crate::simbench::{
    self, run_experiment, screen_by_t, standardize_expression, EvalMode, Method, ModelId,
    ModelSpec, ScreenRule, StandardizeOrder,
};
use crate::tuning::loocv_evaluate;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

pub use io::{read_dataset, DatasetFile};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> CliError {
        CliError::Usage(msg.into())
    }

    fn runtime(msg: impl Into<String>) -> CliError {
        CliError::Runtime(msg.into())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "sparsa",
    version,
    about = "Two-stage sparse linear discriminant analysis"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run a replication study on one of the built-in simulation models.
    Simulate(SimulateArgs),
    /// Fit the two-stage classifier on a labeled CSV dataset.
    Fit(FitArgs),
    /// Classify a CSV dataset with a fitted model file.
    Predict(PredictArgs),
    /// Leave-one-out evaluation of the full pipeline on a CSV dataset.
    Loocv(LoocvArgs),
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
struct CommonArgs {
    /// JSON config file with the same keys as the flags; flags win.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Base RNG seed. Omitted: drawn from system entropy and recorded.
    #[arg(long)]
    seed: Option<u64>,
    /// Refuse to run without an explicit --seed.
    #[arg(long)]
    #[serde(default)]
    strict: bool,
    /// Directory for output files.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: CommonArgs,
    /// Simulation model: 1, 2, 3, or 4.
    #[arg(long)]
    model: Option<u8>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    n1: Option<usize>,
    #[arg(long)]
    n2: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    /// Comma-separated: tlda, nb, lda_full, oracle, tscore_rule.
    #[arg(long)]
    methods: Option<String>,
    /// "analytic" (closed-form rates, default) or "holdout".
    #[arg(long)]
    eval: Option<String>,
    /// Fresh test points per replication in holdout mode.
    #[arg(long)]
    holdout_size: Option<usize>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: CommonArgs,
    /// Training CSV (label in the first column).
    #[arg(long)]
    train: Option<PathBuf>,
    /// Input has genes in rows and samples in columns.
    #[arg(long)]
    #[serde(default)]
    transpose: bool,
    /// Standardize samples to zero mean and features to unit pooled variance.
    #[arg(long)]
    #[serde(default)]
    standardize: bool,
    /// "rows-first" (default) or "features-first".
    #[arg(long)]
    standardize_order: Option<String>,
    /// Keep this many features by largest |t| before fitting.
    #[arg(long)]
    screen_top: Option<usize>,
    /// Keep features with |mean difference| above this threshold.
    #[arg(long)]
    screen_threshold: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    /// Prior probability of class 1 (sets the decision offset ln(pi2/pi1)).
    #[arg(long)]
    prior: Option<f64>,
    /// Path of the model file to write.
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
struct PredictArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: CommonArgs,
    /// Fitted model JSON from `sparsa fit`.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Test CSV; labeled unless --no-labels is given.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    #[serde(default)]
    transpose: bool,
    /// Test file has no label column/row.
    #[arg(long)]
    #[serde(default)]
    no_labels: bool,
    /// Predictions file to write (one label per line).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
struct LoocvArgs {
    #[command(flatten)]
    #[serde(flatten)]
    common: CommonArgs,
    /// Dataset CSV (label in the first column).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    #[serde(default)]
    transpose: bool,
    #[arg(long)]
    #[serde(default)]
    standardize: bool,
    #[arg(long)]
    standardize_order: Option<String>,
    /// Features kept by |t| screening inside each split (default 1000,
    /// capped at p).
    #[arg(long)]
    screen_top: Option<usize>,
    /// Screen once on the full data instead of inside each split.
    #[arg(long)]
    #[serde(default)]
    global_screen: bool,
    /// Disable screening entirely.
    #[arg(long)]
    #[serde(default)]
    no_screen: bool,
    #[arg(long)]
    folds: Option<usize>,
}

/// Entry point for the `sparsa` binary.
pub fn run() -> ExitCode {
    init_thread_pool();
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Simulate(args) => cmd_simulate(args),
        Cmd::Fit(args) => cmd_fit(args),
        Cmd::Predict(args) => cmd_predict(args),
        Cmd::Loocv(args) => cmd_loocv(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

/// SPARSA_THREADS caps the worker count; replication loops use the global
/// pool.
fn init_thread_pool() {
    if let Ok(v) = std::env::var("SPARSA_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

fn merge_from_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("bad config {}: {e}", path.display())))
}

macro_rules! merge_field {
    ($cli:expr, $file:expr, $($field:ident).+) => {
        if $cli.$($field).+.is_none() {
            $cli.$($field).+ = $file.$($field).+.take();
        }
    };
}

fn resolve_seed(common: &CommonArgs) -> Result<(RngSeed, bool), CliError> {
    match common.seed {
        Some(s) => Ok((RngSeed(s), true)),
        None if common.strict => Err(CliError::usage(
            "--strict requires an explicit --seed",
        )),
        None => {
            let nanos = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0x5EED);
            Ok((RngSeed(nanos ^ ((std::process::id() as u64) << 32)), false))
        }
    }
}

fn out_dir(common: &CommonArgs) -> Result<PathBuf, CliError> {
    let dir = common
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn write_meta(dir: &Path, started: Instant) -> Result<(), CliError> {
    let meta = json!({
        "unix_time_seconds": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        "runtime_seconds": started.elapsed().as_secs_f64(),
        "version": env!("CARGO_PKG_VERSION"),
        "threads": rayon::current_num_threads(),
    });
    write_file(
        dir,
        "run_meta.json",
        &serde_json::to_string_pretty(&meta).unwrap(),
    )?;
    Ok(())
}

fn parse_standardize_order(s: &str) -> Result<StandardizeOrder, CliError> {
    match s {
        "rows-first" => Ok(StandardizeOrder::RowCenterThenScale),
        "features-first" => Ok(StandardizeOrder::ScaleThenRowCenter),
        other => Err(CliError::usage(format!(
            "--standardize-order must be rows-first or features-first, got '{other}'"
        ))),
    }
}

fn cmd_simulate(mut args: SimulateArgs) -> Result<(), CliError> {
    let started = Instant::now();
    if let Some(cfg) = args.common.config.clone() {
        let mut file: SimulateArgs = merge_from_config(&cfg)?;
        merge_field!(args, file, common.seed);
        merge_field!(args, file, common.out_dir);
        args.common.strict |= file.common.strict;
        merge_field!(args, file, model);
        merge_field!(args, file, p);
        merge_field!(args, file, n1);
        merge_field!(args, file, n2);
        merge_field!(args, file, reps);
        merge_field!(args, file, methods);
        merge_field!(args, file, eval);
        merge_field!(args, file, holdout_size);
    }

    let model_num = args
        .model
        .ok_or_else(|| CliError::usage("--model is required"))?;
    let model = ModelId::from_number(model_num).ok_or_else(|| {
        CliError::usage(format!(
            "--model must be one of 1, 2, 3, 4; got {model_num}"
        ))
    })?;
    let p = args.p.ok_or_else(|| CliError::usage("--p is required"))?;
    let n1 = args.n1.ok_or_else(|| CliError::usage("--n1 is required"))?;
    let n2 = args.n2.ok_or_else(|| CliError::usage("--n2 is required"))?;
    let reps = args
        .reps
        .ok_or_else(|| CliError::usage("--reps is required"))?;
    if reps < 1 {
        return Err(CliError::usage("--reps must be at least 1"));
    }
    let spec = ModelSpec { model, p, n1, n2 };
    spec.validate().map_err(|e| CliError::usage(e.to_string()))?;

    let methods: Vec<Method> = match &args.methods {
        None => vec![Method::Tlda, Method::Nb, Method::Oracle],
        Some(s) => {
            let mut out = Vec::new();
            for part in s.split(',') {
                out.push(part.parse::<Method>().map_err(CliError::Usage)?);
            }
            out
        }
    };
    let holdout_size = args.holdout_size.unwrap_or(10_000);
    let eval = match args.eval.as_deref() {
        None | Some("analytic") => EvalMode::Analytic,
        Some("holdout") => EvalMode::Holdout(holdout_size),
        Some(other) => {
            return Err(CliError::usage(format!(
                "--eval must be analytic or holdout, got '{other}'"
            )))
        }
    };

    let (seed, seed_explicit) = resolve_seed(&args.common)?;
    let dir = out_dir(&args.common)?;

    let resolved = json!({
        "subcommand": "simulate",
        "model": model.number(),
        "p": p,
        "n1": n1,
        "n2": n2,
        "reps": reps,
        "methods": methods.iter().map(|m| m.name()).collect::<Vec<_>>(),
        "eval": match eval {
            EvalMode::Analytic => "analytic".to_string(),
            EvalMode::Holdout(m) => format!("holdout:{m}"),
        },
        "seed": seed.0,
        "seed_was_explicit": seed_explicit,
        "out_dir": dir.display().to_string(),
    });
    write_file(
        &dir,
        "resolved_config.json",
        &serde_json::to_string_pretty(&resolved).unwrap(),
    )?;

    let (report, trace) = run_experiment(&spec, &methods, reps, seed, eval)
        .map_err(|e| CliError::runtime(e.to_string()))?;

    write_file(
        &dir,
        "simulate_report.json",
        &serde_json::to_string_pretty(&report).unwrap(),
    )?;
    let table = simbench::render_table(&report);
    write_file(&dir, "simulate_report.txt", &table)?;
    write_file(&dir, "feature_trace.csv", &simbench::trace_to_csv(&trace))?;
    write_meta(&dir, started)?;
    print!("{table}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn fit_config_from(
    standardize: bool,
    standardize_order: Option<&str>,
    screen_top: Option<usize>,
    screen_threshold: Option<f64>,
    folds: Option<usize>,
    prior: Option<f64>,
    p: usize,
) -> Result<FitConfig, CliError> {
    if screen_top.is_some() && screen_threshold.is_some() {
        return Err(CliError::usage(
            "--screen-top and --screen-threshold are mutually exclusive",
        ));
    }
    let order = match standardize_order {
        Some(s) => Some(parse_standardize_order(s)?),
        None => Some(StandardizeOrder::RowCenterThenScale),
    };
    if let Some(pi1) = prior {
        if !(pi1 > 0.0 && pi1 < 1.0) {
            return Err(CliError::usage(format!(
                "--prior must lie strictly between 0 and 1, got {pi1}"
            )));
        }
    }
    let screen = if let Some(k) = screen_top {
        if k == 0 {
            return Err(CliError::usage("--screen-top must be positive"));
        }
        Some(ScreenRule::TopK(k.min(p)))
    } else {
        screen_threshold.map(ScreenRule::MeanDiffAbove)
    };
    Ok(FitConfig {
        standardize: if standardize { order } else { None },
        screen,
        folds: folds.unwrap_or(5),
        lambda_factors: None,
        p0_grid: None,
        prior1: prior,
    })
}

fn cmd_fit(mut args: FitArgs) -> Result<(), CliError> {
    let started = Instant::now();
    if let Some(cfg) = args.common.config.clone() {
        let mut file: FitArgs = merge_from_config(&cfg)?;
        merge_field!(args, file, common.seed);
        merge_field!(args, file, common.out_dir);
        args.common.strict |= file.common.strict;
        merge_field!(args, file, train);
        args.transpose |= file.transpose;
        args.standardize |= file.standardize;
        merge_field!(args, file, standardize_order);
        merge_field!(args, file, screen_top);
        merge_field!(args, file, screen_threshold);
        merge_field!(args, file, folds);
        merge_field!(args, file, prior);
        merge_field!(args, file, model_out);
    }
    let train_path = args
        .train
        .clone()
        .ok_or_else(|| CliError::usage("--train is required"))?;
    let (seed, seed_explicit) = resolve_seed(&args.common)?;
    let dir = out_dir(&args.common)?;

    let file = read_dataset(&train_path, args.transpose, true)?;
    let data = file
        .into_labeled()
        .map_err(|e| CliError::runtime(format!("{}: {e}", train_path.display())))?;
    let config = fit_config_from(
        args.standardize,
        args.standardize_order.as_deref(),
        args.screen_top,
        args.screen_threshold,
        args.folds,
        args.prior,
        data.p(),
    )?;

    let resolved = json!({
        "subcommand": "fit",
        "train": train_path.display().to_string(),
        "transpose": args.transpose,
        "standardize": args.standardize,
        "standardize_order": args.standardize_order.clone().unwrap_or_else(|| "rows-first".into()),
        "screen_top": args.screen_top,
        "screen_threshold": args.screen_threshold,
        "folds": config.folds,
        "prior": args.prior,
        "seed": seed.0,
        "seed_was_explicit": seed_explicit,
        "out_dir": dir.display().to_string(),
    });
    write_file(
        &dir,
        "resolved_config.json",
        &serde_json::to_string_pretty(&resolved).unwrap(),
    )?;

    let fitted = config
        .fit(&data, seed)
        .map_err(|e| CliError::runtime(e.to_string()))?;

    let model_path = args
        .model_out
        .clone()
        .unwrap_or_else(|| dir.join("model.json"));
    std::fs::write(&model_path, fitted.to_json())
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", model_path.display())))?;
    write_meta(&dir, started)?;

    let train_errors = (0..data.n())
        .filter(|&i| {
            fitted
                .predict(data.row(i))
                .map(|p| p != data.label(i))
                .unwrap_or(true)
        })
        .count();
    println!(
        "selected {} features (1-based positions {:?}), lambda {:.6}, training error {}/{}",
        fitted.model.p0_used,
        fitted.selected_original,
        fitted.model.lambda_used,
        train_errors,
        data.n()
    );
    println!("model written to {}", model_path.display());
    Ok(())
}

fn cmd_predict(mut args: PredictArgs) -> Result<(), CliError> {
    let started = Instant::now();
    if let Some(cfg) = args.common.config.clone() {
        let mut file: PredictArgs = merge_from_config(&cfg)?;
        merge_field!(args, file, common.out_dir);
        merge_field!(args, file, model);
        merge_field!(args, file, test);
        args.transpose |= file.transpose;
        args.no_labels |= file.no_labels;
        merge_field!(args, file, out);
    }
    let model_path = args
        .model
        .clone()
        .ok_or_else(|| CliError::usage("--model is required"))?;
    let test_path = args
        .test
        .clone()
        .ok_or_else(|| CliError::usage("--test is required"))?;
    let dir = out_dir(&args.common)?;

    let model_text = std::fs::read_to_string(&model_path)
        .map_err(|e| CliError::runtime(format!("cannot read {}: {e}", model_path.display())))?;
    let fitted = FittedPipeline::from_json(&model_text)
        .map_err(|e| CliError::runtime(format!("{}: {e}", model_path.display())))?;

    let file = read_dataset(&test_path, args.transpose, !args.no_labels)?;
    let (features, labels) = file.into_parts();
    if features.nrows() == 0 {
        return Err(CliError::runtime(format!(
            "{}: no samples found",
            test_path.display()
        )));
    }

    let mut predictions = Vec::with_capacity(features.nrows());
    for i in 0..features.nrows() {
        let label = fitted
            .predict(features.row(i))
            .map_err(|e| CliError::runtime(format!("row {}: {e}", i + 1)))?;
        predictions.push(label);
    }

    let out_path = args
        .out
        .clone()
        .unwrap_or_else(|| dir.join("predictions.csv"));
    let mut text = String::new();
    for p in &predictions {
        text.push_str(&format!("{p}\n"));
    }
    std::fs::write(&out_path, text)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", out_path.display())))?;

    let resolved = json!({
        "subcommand": "predict",
        "model": model_path.display().to_string(),
        "test": test_path.display().to_string(),
        "transpose": args.transpose,
        "no_labels": args.no_labels,
        "out": out_path.display().to_string(),
        "out_dir": dir.display().to_string(),
    });
    write_file(
        &dir,
        "resolved_config.json",
        &serde_json::to_string_pretty(&resolved).unwrap(),
    )?;

    let summary = if let Some(labels) = labels {
        let errors = predictions
            .iter()
            .zip(labels.iter())
            .filter(|(p, t)| p != t)
            .count();
        let rate = errors as f64 / predictions.len() as f64;
        println!("test error {errors}/{} ({:.4})", predictions.len(), rate);
        json!({
            "n": predictions.len(),
            "errors": errors,
            "error_rate": rate,
        })
    } else {
        println!("predicted {} samples", predictions.len());
        json!({ "n": predictions.len(), "errors": null, "error_rate": null })
    };
    write_file(
        &dir,
        "predict_summary.json",
        &serde_json::to_string_pretty(&summary).unwrap(),
    )?;
    write_meta(&dir, started)?;
    Ok(())
}

fn cmd_loocv(mut args: LoocvArgs) -> Result<(), CliError> {
    let started = Instant::now();
    if let Some(cfg) = args.common.config.clone() {
        let mut file: LoocvArgs = merge_from_config(&cfg)?;
        merge_field!(args, file, common.seed);
        merge_field!(args, file, common.out_dir);
        args.common.strict |= file.common.strict;
        merge_field!(args, file, data);
        args.transpose |= file.transpose;
        args.standardize |= file.standardize;
        merge_field!(args, file, standardize_order);
        merge_field!(args, file, screen_top);
        args.global_screen |= file.global_screen;
        args.no_screen |= file.no_screen;
        merge_field!(args, file, folds);
    }
    let data_path = args
        .data
        .clone()
        .ok_or_else(|| CliError::usage("--data is required"))?;
    let (seed, seed_explicit) = resolve_seed(&args.common)?;
    let dir = out_dir(&args.common)?;

    let file = read_dataset(&data_path, args.transpose, true)?;
    let data = file
        .into_labeled()
        .map_err(|e| CliError::runtime(format!("{}: {e}", data_path.display())))?;

    let screen_top = if args.no_screen {
        None
    } else {
        Some(args.screen_top.unwrap_or(1000).min(data.p()))
    };
    let mut config = fit_config_from(
        args.standardize,
        args.standardize_order.as_deref(),
        screen_top,
        None,
        args.folds,
        None,
        data.p(),
    )?;
    if !args.standardize {
        config.standardize = None;
    }

    // For the global variant the screen set is pinned once, on the full data
    // after the same standardization the splits will apply.
    let fixed_screen = if args.global_screen {
        let Some(k) = screen_top else {
            return Err(CliError::usage("--global-screen requires screening"));
        };
        let (base, scaling) = match config.standardize {
            Some(order) => {
                let (d, rec) = standardize_expression(&data, order)
                    .map_err(|e| CliError::runtime(e.to_string()))?;
                (d, Some(rec))
            }
            None => (data.clone(), None),
        };
        let (_, kept) = screen_by_t(&base, ScreenRule::TopK(k.min(base.p())))
            .map_err(|e| CliError::runtime(e.to_string()))?;
        let original: Vec<usize> = kept
            .iter()
            .map(|&j| scaling.as_ref().map_or(j, |rec| rec.kept[j]))
            .collect();
        config.screen = None;
        Some(original)
    } else {
        None
    };

    let resolved = json!({
        "subcommand": "loocv",
        "data": data_path.display().to_string(),
        "transpose": args.transpose,
        "standardize": args.standardize,
        "standardize_order": args.standardize_order.clone().unwrap_or_else(|| "rows-first".into()),
        "screen_top": screen_top,
        "global_screen": args.global_screen,
        "folds": config.folds,
        "seed": seed.0,
        "seed_was_explicit": seed_explicit,
        "out_dir": dir.display().to_string(),
    });
    write_file(
        &dir,
        "resolved_config.json",
        &serde_json::to_string_pretty(&resolved).unwrap(),
    )?;

    let recipe = LoocvPipeline {
        config,
        global_screen: args.global_screen,
        fixed_screen,
    };
    let report =
        loocv_evaluate(&data, &recipe, seed).map_err(|e| CliError::runtime(e.to_string()))?;

    let report_json = json!({
        "n": report.n,
        "errors": report.errors,
        "error_rate": report.error_rate,
        "error_pct": 100.0 * report.error_rate,
        "mean_selected": report.mean_selected,
        "sd_selected": report.sd_selected,
        "seed": seed.0,
    });
    write_file(
        &dir,
        "loocv_report.json",
        &serde_json::to_string_pretty(&report_json).unwrap(),
    )?;

    let mut splits = String::from("index,truth,predicted,correct,selected_count,lambda\n");
    for s in &report.splits {
        splits.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.index + 1,
            s.truth,
            s.predicted,
            s.correct,
            s.selected_count.map_or(String::new(), |c| c.to_string()),
            s.lambda.map_or(String::new(), |l| format!("{l}")),
        ));
    }
    write_file(&dir, "loocv_splits.csv", &splits)?;
    write_meta(&dir, started)?;

    println!(
        "leave-one-out error {}/{} ({:.2}%), selected features {:.2} (sd {:.2})",
        report.errors,
        report.n,
        100.0 * report.error_rate,
        report.mean_selected,
        report.sd_selected
    );
    Ok(())
}
