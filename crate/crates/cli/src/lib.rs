//! Command-line driver: `train`, `predict`, `evaluate`, `sweep`, `compare`.

pub mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use mlpcast::experiments::{self, TraceExperiment};
use mlpcast::model_file::{self, write_atomic};
use mlpcast::{eval, reports, EvaluationReport, ModelFile, PriceSeries, TrainingMetadata};

use crate::config::{RunConfig, RunConfigFile, SEED_ENV};

#[derive(Debug, Parser)]
#[command(name = "mlpcast", version, about = "MLP stock-price forecasting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model on the leading fraction of a price series.
    Train(TrainArgs),
    /// Predict the days after the training period with a saved model.
    Predict(PredictArgs),
    /// Summarize a prediction CSV as a JSON report.
    Evaluate(EvaluateArgs),
    /// Run one of the tuning experiments.
    Sweep(SweepArgs),
    /// Score other tools' predictions against the same actuals.
    Compare(CompareArgs),
}

/// Flags that override config-file values.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelFlags {
    /// TOML run configuration.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Layer sizes, e.g. 5:21:21:1.
    #[arg(long)]
    pub topology: Option<String>,
    #[arg(long)]
    pub epochs: Option<u64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub momentum: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub log_interval: Option<u64>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
}

impl ModelFlags {
    fn as_overrides(&self) -> RunConfigFile {
        RunConfigFile {
            topology: self.topology.clone(),
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            seed: self.seed,
            log_interval: self.log_interval,
            train_fraction: self.train_fraction,
            ..Default::default()
        }
    }

    fn resolve(&self, file: RunConfigFile) -> anyhow::Result<RunConfig> {
        RunConfig::resolve(file, self.as_overrides(), std::env::var(SEED_ENV).ok())
    }

    fn config_file(&self) -> anyhow::Result<RunConfigFile> {
        match &self.config {
            Some(path) => RunConfigFile::load(path),
            None => Ok(RunConfigFile::default()),
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// `date,close` CSV.
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Model file to write.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Training-error CSV (defaults to `<out>.trace.csv`).
    #[arg(long, value_name = "FILE")]
    pub trace: Option<PathBuf>,
    /// Instrument name recorded in the model (defaults to the data file stem).
    #[arg(long)]
    pub instrument: Option<String>,
    #[command(flatten)]
    pub model: ModelFlags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    #[value(name = "walk_forward")]
    WalkForward,
    #[value(name = "recursive")]
    Recursive,
}

impl From<ModeArg> for eval::PredictionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::WalkForward => eval::PredictionMode::WalkForward,
            ModeArg::Recursive => eval::PredictionMode::Recursive,
        }
    }
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    #[arg(long, default_value_t = mlpcast::pipeline::DEFAULT_HORIZON)]
    pub horizon: usize,
    #[arg(long, value_enum, default_value = "walk_forward")]
    pub mode: ModeArg,
    /// First day to predict (defaults to the day after the training period).
    #[arg(long)]
    pub start_date: Option<NaiveDate>,
    /// `date,actual,predicted` CSV to write.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_name = "FILE")]
    pub predictions: PathBuf,
    /// JSON report to write.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    /// Hidden-layer width 1..=25 (both layers).
    Neurons,
    /// Training fraction 10%..=90%.
    Volume,
    /// Training error over epochs.
    Epochs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub kind: SweepKind,
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// TOML sweep spec: run settings plus `values` or `max_epochs`.
    #[arg(long, value_name = "FILE")]
    pub spec: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Epochs sweep only: write the final training state here.
    #[arg(long, value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
    /// Epochs sweep only: continue from this checkpoint.
    #[arg(long, value_name = "FILE")]
    pub resume: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelFlags,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Prediction CSV (`date,actual[,predicted]`) supplying the actuals.
    #[arg(long, value_name = "FILE")]
    pub actuals: PathBuf,
    /// Another tool's `date,predicted` CSV, as NAME=PATH. Repeatable.
    #[arg(long = "tool", value_name = "NAME=PATH")]
    pub tools: Vec<String>,
    /// Row name for the actuals file's own predicted column.
    #[arg(long, default_value = "model")]
    pub self_name: String,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

pub const DEFAULT_TRACE_EPOCHS: u64 = 180_000;

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn read_series(path: &Path, instrument: Option<&str>) -> anyhow::Result<PriceSeries> {
    let name = instrument
        .map(str::to_string)
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_default();
    mlpcast::load_series(open(path)?, name).with_context(|| format!("reading {}", path.display()))
}

fn write_output(path: &Path, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> anyhow::Result<()> {
    write_atomic(path, |w| {
        let mut buf = BufWriter::new(w);
        fill(&mut buf)?;
        buf.flush()
    })?;
    Ok(())
}

fn default_trace_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".trace.csv");
    PathBuf::from(name)
}

fn train(args: &TrainArgs) -> anyhow::Result<String> {
    let run = args.model.resolve(args.model.config_file()?)?;
    let series = read_series(&args.data, args.instrument.as_deref())?;
    let fitted = mlpcast::fit(&series, &run.model)?;
    let training = &run.model.training;
    let file = ModelFile::new(
        &fitted.network,
        &fitted.params,
        TrainingMetadata {
            instrument: series.instrument().to_string(),
            seed: training.seed,
            seed_source: run.seed_source.clone(),
            epochs: training.epochs,
            learning_rate: training.learning_rate,
            momentum: training.momentum,
            train_fraction: run.model.train_fraction,
            window: run.model.window(),
            train_start: fitted.train_start,
            train_end: fitted.train_end,
        },
    );
    let trace_path = args.trace.clone().unwrap_or_else(|| default_trace_path(&args.out));
    let json = file.to_json()?;
    write_output(&trace_path, |w| reports::write_trace(w, &fitted.trace))?;
    write_output(&args.out, |w| w.write_all(json.as_bytes()))?;
    let last = fitted.trace.last().map_or(f64::NAN, |s| s.mse);
    Ok(format!(
        "trained {} on {} points ({}..{}), {} epochs, seed {} ({}), final mse {last:.6e}",
        run.model.topology,
        fitted.split_index,
        fitted.train_start,
        fitted.train_end,
        training.epochs,
        training.seed,
        run.seed_source
    ))
}

fn predict(args: &PredictArgs) -> anyhow::Result<String> {
    if args.horizon == 0 {
        bail!("horizon must be at least 1");
    }
    let file = ModelFile::load(&args.model)?;
    let network = file.network()?;
    let series = read_series(&args.data, None)?;
    let start = match args.start_date {
        Some(d) => series.points().partition_point(|p| p.date < d),
        None => series.index_after(file.training.train_end),
    };
    let available = series.len().saturating_sub(start);
    if args.horizon > available {
        bail!(
            "horizon {} exceeds the {available} data points available after {} (limit {available})",
            args.horizon,
            file.training.train_end
        );
    }
    let records = eval::predict(
        args.mode.into(),
        &network,
        &file.normalization,
        &series,
        start,
        args.horizon,
    )?;
    write_output(&args.out, |w| reports::write_predictions(w, &records))?;
    Ok(format!(
        "predicted {} days from {} ({})",
        records.len(),
        records[0].date,
        eval::PredictionMode::from(args.mode)
    ))
}

fn evaluate(args: &EvaluateArgs) -> anyhow::Result<String> {
    let records = reports::read_predictions(open(&args.predictions)?)
        .with_context(|| format!("reading {}", args.predictions.display()))?;
    let report = EvaluationReport::from_records(records)?;
    let summary = report.summary();
    let json = reports::summary_to_json(&summary)?;
    write_output(&args.out, |w| w.write_all(json.as_bytes()))?;
    Ok(format!(
        "mape {:.4}% rmse {:.4} max variance {:+.3}% on {} over {} days",
        summary.mape_pct, summary.rmse, summary.max_variance_pct, summary.max_variance_date, summary.n
    ))
}

fn default_values(kind: SweepKind) -> Vec<f64> {
    match kind {
        SweepKind::Neurons => (1..=25).map(f64::from).collect(),
        SweepKind::Volume => (1..=9).map(|i| f64::from(i) / 10.0).collect(),
        SweepKind::Epochs => Vec::new(),
    }
}

fn sweep(args: &SweepArgs) -> anyhow::Result<String> {
    let spec_file = match &args.spec {
        Some(path) => RunConfigFile::load(path)?,
        None => RunConfigFile::default(),
    };
    let file = args.model.config_file()?.overlay(spec_file.clone());
    let run = args.model.resolve(file)?;
    let series = read_series(&args.data, None)?;
    if args.kind != SweepKind::Epochs && (args.checkpoint.is_some() || args.resume.is_some()) {
        bail!("--checkpoint and --resume apply only to --kind epochs");
    }

    match args.kind {
        SweepKind::Neurons | SweepKind::Volume => {
            let variable = if args.kind == SweepKind::Neurons {
                experiments::SweepVariable::HiddenNeurons
            } else {
                experiments::SweepVariable::TrainFraction
            };
            let spec = experiments::SweepSpec {
                base: run.experiment_base(),
                variable,
                values: spec_file.values.unwrap_or_else(|| default_values(args.kind)),
            };
            spec.validate()?;
            let result = experiments::run_sweep(&series, &spec)?;
            write_output(&args.out, |w| reports::write_sweep(w, &result))?;
            Ok(format!("{} sweep rows written", result.rows.len()))
        }
        SweepKind::Epochs => {
            let max_epochs = spec_file.max_epochs.unwrap_or(DEFAULT_TRACE_EPOCHS);
            let mut experiment = match &args.resume {
                Some(path) => {
                    let checkpoint = model_file::load_checkpoint(path)?;
                    TraceExperiment::resume(&series, &run.model, checkpoint)?
                }
                None => TraceExperiment::new(&series, &run.model)?,
            };
            if experiment.epochs_completed() > max_epochs {
                bail!(
                    "checkpoint is already at epoch {}, past max_epochs {max_epochs}",
                    experiment.epochs_completed()
                );
            }
            let trace = experiment.advance_to(max_epochs)?;
            if let Some(path) = &args.checkpoint {
                let json = model_file::checkpoint_to_json(&experiment.checkpoint())?;
                write_output(path, |w| w.write_all(json.as_bytes()))?;
            }
            write_output(&args.out, |w| reports::write_trace(w, &trace))?;
            Ok(format!(
                "{} trace samples up to epoch {}",
                trace.samples().len(),
                experiment.epochs_completed()
            ))
        }
    }
}

fn parse_tool(spec: &str) -> anyhow::Result<(String, PathBuf)> {
    let (name, path) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("--tool {spec:?} must look like NAME=PATH"))?;
    if name.is_empty() || name.contains([',', '"', '\n']) {
        bail!("tool name {name:?} must be non-empty without commas or quotes");
    }
    Ok((name.to_string(), PathBuf::from(path)))
}

fn compare(args: &CompareArgs) -> anyhow::Result<String> {
    let tools = args
        .tools
        .iter()
        .map(|t| parse_tool(t))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let actuals =
        reports::read_actuals(open(&args.actuals)?).with_context(|| format!("reading {}", args.actuals.display()))?;
    let mut sources = Vec::new();
    if let Some(predicted) = &actuals.predicted {
        sources.push(experiments::ToolPredictions {
            name: args.self_name.clone(),
            predictions: actuals
                .actuals
                .iter()
                .map(|a| a.0)
                .zip(predicted.iter().copied())
                .collect(),
        });
    }
    for (name, path) in tools {
        let preds = experiments::load_tool_predictions(open(&path)?, name)
            .with_context(|| format!("reading {}", path.display()))?;
        sources.push(preds);
    }
    if sources.is_empty() {
        bail!("nothing to compare: the actuals file has no predicted column and no --tool was given");
    }
    let scores = experiments::compare_external(&actuals.actuals, &sources)?;
    write_output(&args.out, |w| reports::write_comparison(w, &scores))?;
    Ok(format!(
        "compared {} sources over {} days",
        scores.len(),
        actuals.actuals.len()
    ))
}

/// Runs one command, returning a one-line summary.
pub fn execute(cli: &Cli) -> anyhow::Result<String> {
    match &cli.command {
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => sweep(a),
        Command::Compare(a) => compare(a),
    }
}

/// Parses `argv` and runs it. Returns the process exit code; diagnostics go
/// to stderr as a single line.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let rendered = e.to_string();
            let message: Vec<&str> = rendered
                .lines()
                .take_while(|l| !l.starts_with("Usage:"))
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with("For more information"))
                .collect();
            eprintln!("{}", message.join(" "));
            return 2;
        }
    };
    match execute(&cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            let chain: Vec<String> = e.chain().map(|c| c.to_string()).collect();
            eprintln!("error: {}", chain.join(": ").replace('\n', " "));
            1
        }
    }
}
