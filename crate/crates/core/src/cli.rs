//! The `psvae` command line: `fit`, `sample` and `eval`.
//!
//! Exit codes: 0 ok, 2 usage or configuration, 3 data, 4 numeric abort.
//! Every failure prints a single `error: <kind>: <reason>` line to stderr.

use std::collections::HashMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data_pipeline::{infer_schema_with, KindOverride, RawTable, SchemaOptions};
use crate::error::{Error, Result};
use crate::evaluation::{f1_cross, identity_f1, l1_metric, pearson_rho_diff, ClassifierConfig, MetricsReport};
use crate::model_file::ModelFile;
use crate::post_selection::{CategorySampling, DEFAULT_CYCLES};
use crate::rng::{stream, Stream};
use crate::vae::TrainConfig;

#[derive(Debug, Parser)]
#[command(name = "psvae", version, about = "Synthetic tabular data with a post-selected VAE")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model on a CSV file.
    Fit(FitArgs),
    /// Generate synthetic rows from a trained model.
    Sample(SampleArgs),
    /// Score a synthetic CSV against the real one.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub csv: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub epochs: u64,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    pub batch: u64,
    #[arg(long, default_value_t = 1e-3, value_parser = positive_f64)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Force a column's kind, e.g. `--type age=continuous`.
    #[arg(long = "type", value_name = "COL=KIND", value_parser = parse_override)]
    pub types: Vec<(String, KindOverride)>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    pub model: PathBuf,
    #[arg(short = 'n', value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = DEFAULT_CYCLES)]
    pub cycles: usize,
    /// Pick each column's most likely category instead of sampling.
    #[arg(long)]
    pub argmax: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    pub real: PathBuf,
    pub synthetic: PathBuf,
    /// Label column for the F1 classifier.
    #[arg(long)]
    pub target: String,
    /// Also compute the train-80% / test-20% F1 on the real table.
    #[arg(long)]
    pub identity: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "type", value_name = "COL=KIND", value_parser = parse_override)]
    pub types: Vec<(String, KindOverride)>,
    /// Dataset name for the report; defaults to the real file's stem.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Model name for the report; defaults to the synthetic file's stem.
    #[arg(long)]
    pub model: Option<String>,
}

fn positive_f64(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn parse_override(s: &str) -> std::result::Result<(String, KindOverride), String> {
    let (col, kind) = s.split_once('=').ok_or_else(|| format!("`{s}` is not COL=KIND"))?;
    let kind = match kind {
        "categorical" => KindOverride::Categorical,
        "continuous" => KindOverride::Continuous,
        other => return Err(format!("unknown kind `{other}` (categorical|continuous)")),
    };
    Ok((col.to_string(), kind))
}

fn schema_options(types: &[(String, KindOverride)]) -> SchemaOptions {
    SchemaOptions { overrides: types.iter().cloned().collect::<HashMap<_, _>>(), ..Default::default() }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn cmd_fit(args: &FitArgs, out: &mut dyn Write) -> Result<()> {
    let raw = RawTable::read_csv_path(&args.csv)?;
    let config = TrainConfig {
        epochs: args.epochs as usize,
        batch_size: args.batch as usize,
        learning_rate: args.lr,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let mut io_err = None;
    let (model, _) = ModelFile::fit(&raw, &schema_options(&args.types), &config, |r| {
        if io_err.is_none() {
            if let Err(e) = writeln!(
                out,
                "epoch={} l_re={} l_kl={} beta={} seconds={:.3}",
                r.epoch, r.sum_re, r.sum_kl, r.beta, r.seconds
            ) {
                io_err = Some(e);
            }
        }
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    model.save(&args.output)
}

pub fn cmd_sample(args: &SampleArgs, out: &mut dyn Write) -> Result<()> {
    let model = ModelFile::load(&args.model)?;
    let sampling = if args.argmax { CategorySampling::Argmax } else { CategorySampling::Categorical };
    let (table, _) = model.sample(args.n as usize, args.cycles, sampling, args.seed)?;
    match &args.output {
        Some(path) => table.write_csv(std::fs::File::create(path)?),
        None => table.write_csv(out),
    }
}

pub fn evaluate(args: &EvalArgs) -> Result<MetricsReport> {
    let real = RawTable::read_csv_path(&args.real)?;
    let syn = RawTable::read_csv_path(&args.synthetic)?;
    if real.headers() != syn.headers() {
        return Err(Error::Eval(format!(
            "header mismatch: real {:?} vs synthetic {:?}",
            real.headers(),
            syn.headers()
        )));
    }
    if real.column_index(&args.target).is_none() {
        return Err(Error::Config(format!("target column `{}` not found", args.target)));
    }
    let schema = infer_schema_with(&real, &schema_options(&args.types))?;
    let cfg = ClassifierConfig::new(&args.target);
    let f1 = f1_cross(&syn, &real, &schema, &cfg, &mut stream(args.seed, Stream::Classifier))?;
    let identity = if args.identity {
        Some(identity_f1(&real, &schema, &cfg, 0.8, &mut stream(args.seed, Stream::Split))?)
    } else {
        None
    };
    Ok(MetricsReport {
        l1: l1_metric(&real, &syn, &schema)?,
        rho: pearson_rho_diff(&real, &syn, &schema)?,
        f1,
        identity_f1: identity,
        epoch_seconds: None,
        dataset: args.dataset.clone().unwrap_or_else(|| stem(&args.real)),
        model: args.model.clone().unwrap_or_else(|| stem(&args.synthetic)),
        seed: args.seed,
    })
}

pub fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let report = evaluate(args)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Eval(e.to_string()))?;
    writeln!(out, "{json}")?;
    Ok(())
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a, out),
        Command::Sample(a) => cmd_sample(a, out),
        Command::Eval(a) => cmd_eval(a, out),
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.exit_code() == 0 {
                let _ = write!(out, "{e}");
                return 0;
            }
            let rendered = e.to_string();
            let first = rendered.lines().next().unwrap_or("").trim_start_matches("error:").trim();
            let _ = writeln!(err, "error: usage: {}", one_line(first));
            return 2;
        }
    };
    match run(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {}", e.kind(), one_line(&e.to_string()));
            e.exit_code()
        }
    }
}
