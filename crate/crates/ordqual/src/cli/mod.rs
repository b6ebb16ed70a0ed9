//! Command-line front end: `validate`, `weights`, `fit`, `score`, `evaluate`,
//! `compare`, `synth`.
//!
//! Exit codes: 0 success, 1 data error, 2 usage error. Failures print one JSON
//! line on stderr: `{"error": <kind>, "message": <text>}`.

mod config;

use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ordqual_core::evaluation::correlation_matrix;
use ordqual_core::pipeline::{evaluate_models, fit_quality_model, weight_for_population, Bootstrap, ModelSpec};
use ordqual_core::scoring::{score_dataset, MIN_DRAWS};
use ordqual_core::synth::{generate, GeneratorSpec};
use ordqual_core::weighting::BALANCED_SAMPLE_COUNTS;
use ordqual_core::{
    compute_weights, PcaWeighting, Penalty, PopulationCounts, QualityClass, Strictness, ZeroPopulation, NUM_CLASSES,
};
use serde_json::json;

pub use config::Config;

use crate::error::IoError;
use crate::io::{self, DataFormat, LoadedDataset};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(IoError),
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }

    /// Single-line machine-readable form.
    pub fn to_json(&self) -> String {
        let value = match self {
            CliError::Usage(message) => json!({ "error": "UsageError", "message": message }),
            CliError::Data(IoError::InvalidRows(rows)) => {
                json!({ "error": "InvalidRows", "message": IoError::InvalidRows(rows.clone()).to_string(), "rows": rows })
            }
            CliError::Data(e) => json!({ "error": e.kind(), "message": e.to_string() }),
        };
        value.to_string()
    }
}

impl<E: Into<IoError>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Data(e.into())
    }
}

/// Comma-separated list of exactly `N` values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct List<T, const N: usize>(pub [T; N]);

impl<T: FromStr + Copy + Default, const N: usize> FromStr for List<T, N>
where
    T::Err: Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let items: Vec<&str> = s.split(',').map(str::trim).filter(|p| !p.is_empty()).collect();
        if items.len() != N {
            return Err(format!("expected {N} comma-separated values, got {}", items.len()));
        }
        let mut out = [T::default(); N];
        for (slot, item) in out.iter_mut().zip(items) {
            *slot = item.parse().map_err(|e| format!("`{item}`: {e}"))?;
        }
        Ok(List(out))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Unit {
    /// Table of English Wikipedia article counts per class.
    Article,
    /// Table of English Wikipedia revision counts per class.
    Revision,
    /// Every class equally common.
    Class,
    /// Counts from `--population`.
    #[value(alias = "custom-file")]
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PenaltyChoice {
    /// Student-t prior (3 degrees of freedom, scale 2.5) on every parameter.
    T,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ZeroPolicy {
    Reject,
    ZeroWeight,
}

#[derive(Debug, Parser)]
#[command(name = "ordqual", version, about = "Ordinal quality scores from classifier probability vectors")]
pub struct Cli {
    /// TOML file with default values for any flag (command-line flags win).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a dataset and report row and class counts.
    Validate(ValidateArgs),
    /// Inverse-probability weights from sample and population class counts.
    Weights(WeightsArgs),
    /// Fit a model and write it to a model file.
    Fit(FitArgs),
    /// Score a dataset with a fitted model.
    Score(ScoreArgs),
    /// Accuracy and calibration of fitted models on a labeled dataset.
    Evaluate(EvaluateArgs),
    /// Correlations between two or more score files.
    Compare(CompareArgs),
    /// Generate a synthetic dataset from a known ordinal model.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Dataset format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<DataFormat>,
    /// Drop invalid rows and report them instead of failing.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Args)]
pub struct PopulationArgs {
    /// Unit of analysis the weights should represent [default: article].
    #[arg(long, value_enum)]
    pub unit: Option<Unit>,
    /// Population counts file (implies `--unit custom`).
    #[arg(long)]
    pub population: Option<PathBuf>,
    /// Sample class counts `stub,start,c,b,ga,fa` (default: the dataset's own counts).
    #[arg(long)]
    pub sample_counts: Option<List<u64, NUM_CLASSES>>,
    /// What to do with classes absent from the population [default: reject].
    #[arg(long, value_enum)]
    pub zero_population: Option<ZeroPolicy>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    pub dataset: PathBuf,
    #[command(flatten)]
    pub input: InputArgs,
    /// Also write the JSON report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WeightsArgs {
    #[command(flatten)]
    pub population: PopulationArgs,
    /// Take sample counts from this dataset (default: the published balanced sample).
    #[arg(long, conflicts_with = "sample_counts")]
    pub dataset: Option<PathBuf>,
    #[command(flatten)]
    pub input: InputArgs,
    /// Write the table here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    pub dataset: PathBuf,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub population: PopulationArgs,
    #[command(flatten)]
    pub input: InputArgs,
    /// Parameter penalty [default: t].
    #[arg(long, value_enum)]
    pub penalty: Option<PenaltyChoice>,
    /// Accepted for uniformity; fitting itself is deterministic [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fit the PCA with unit weights instead of the analysis weights.
    #[arg(long)]
    pub unweighted_pca: bool,
    /// Newton/BFGS iteration cap [default: 500].
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    pub model: PathBuf,
    pub dataset: PathBuf,
    /// Score CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the thresholds report here.
    #[arg(long)]
    pub thresholds_out: Option<PathBuf>,
    #[command(flatten)]
    pub input: InputArgs,
    /// Parameter draws for the 95% intervals [default: 1000, minimum 1000].
    #[arg(long)]
    pub draws: Option<usize>,
    /// Seed for the parameter draws [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub dataset: PathBuf,
    /// Model to evaluate, as `name=path` or just `path`; repeatable.
    #[arg(long = "model", required = true)]
    pub models: Vec<String>,
    #[command(flatten)]
    pub population: PopulationArgs,
    #[command(flatten)]
    pub input: InputArgs,
    /// Directory for accuracy.csv, calibration.csv and calibration_plot.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Bootstrap replicates for calibration standard errors (default: linearized).
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Seed for the bootstrap [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Score files written by `score`; each becomes a measure named after the file.
    #[arg(required = true, num_args = 2..)]
    pub scores: Vec<PathBuf>,
    /// Score column to correlate [default: phi].
    #[arg(long)]
    pub column: Option<String>,
    /// Add `evenly_spaced` and `mpqc` from the first file as measures.
    #[arg(long)]
    pub baselines: bool,
    /// Write the correlation table here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Dataset CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth sidecar CSV to write.
    #[arg(long)]
    pub truth: PathBuf,
    /// Number of instances [default: 1000].
    #[arg(long)]
    pub n: Option<usize>,
    /// Dirichlet concentration of the probability vectors [default: 50].
    #[arg(long)]
    pub kappa: Option<f64>,
    /// [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Five increasing thresholds [default: -2.5,-1,0,1.2,2.6].
    #[arg(long, allow_hyphen_values = true)]
    pub thresholds: Option<List<f64, 5>>,
    /// Five coefficients on the latent features [default: 1.2,-0.7,0.4,0.9,-0.3].
    #[arg(long, allow_hyphen_values = true)]
    pub coefficients: Option<List<f64, 5>>,
}

pub const DEFAULT_THRESHOLDS: [f64; 5] = [-2.5, -1.0, 0.0, 1.2, 2.6];
pub const DEFAULT_COEFFICIENTS: [f64; 5] = [1.2, -0.7, 0.4, 0.9, -0.3];

/// Parse arguments and run. `--help` / `--version` print and return Ok.
pub fn run<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            // Keep clap's message but drop the usage/help trailer and line breaks.
            let rendered = e.to_string();
            let message: Vec<&str> = rendered
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:"))
                .filter(|l| !l.is_empty())
                .collect();
            let message = message.join(" ");
            return Err(CliError::usage(message.trim_start_matches("error: ")));
        }
    };
    let cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Validate(a) => validate(a, &cfg),
        Command::Weights(a) => weights(a, &cfg),
        Command::Fit(a) => fit(a, &cfg),
        Command::Score(a) => score(a, &cfg),
        Command::Evaluate(a) => evaluate(a, &cfg),
        Command::Compare(a) => compare(a, &cfg),
        Command::Synth(a) => synth(a, &cfg),
    }
}

fn load(path: &Path, input: &InputArgs, cfg: &Config) -> Result<LoadedDataset, CliError> {
    let format = match input.format {
        Some(f) => Some(f),
        None => cfg
            .optional::<String>(None, "format")?
            .map(|s| DataFormat::from_str(&s, true))
            .transpose()
            .map_err(CliError::usage)?,
    };
    let mode = if cfg.flag(input.lenient, "lenient")? { Strictness::Lenient } else { Strictness::Strict };
    let loaded = io::read_dataset(path, format, mode)?;
    for d in &loaded.dropped {
        eprintln!(
            "{}",
            json!({ "warning": "DroppedRow", "path": path.display().to_string(), "row": d.row, "kind": d.kind, "message": d.message })
        );
    }
    Ok(loaded)
}

fn population(args: &PopulationArgs, cfg: &Config) -> Result<PopulationCounts, CliError> {
    let file = cfg.optional(args.population.clone(), "population")?;
    let unit = match cfg.optional::<String>(None, "unit")? {
        _ if args.unit.is_some() => args.unit,
        Some(s) => Some(Unit::from_str(&s, true).map_err(|e| CliError::usage(format!("config `unit`: {e}")))?),
        None => None,
    };
    match (unit, file) {
        (None | Some(Unit::Custom), Some(path)) => Ok(io::read_population(&path)?),
        (Some(Unit::Custom), None) => Err(CliError::usage("--unit custom needs --population <FILE>")),
        (Some(_), Some(_)) => Err(CliError::usage("--population can only be combined with --unit custom")),
        (None | Some(Unit::Article), None) => Ok(PopulationCounts::articles()),
        (Some(Unit::Revision), None) => Ok(PopulationCounts::revisions()),
        (Some(Unit::Class), None) => Ok(PopulationCounts::uniform_classes()),
    }
}

fn zero_policy(args: &PopulationArgs, cfg: &Config) -> Result<ZeroPopulation, CliError> {
    Ok(match cfg.choice(args.zero_population, "zero_population", ZeroPolicy::Reject)? {
        ZeroPolicy::Reject => ZeroPopulation::Reject,
        ZeroPolicy::ZeroWeight => ZeroPopulation::ZeroWeight,
    })
}

fn sample_counts(args: &PopulationArgs, cfg: &Config) -> Result<Option<[u64; NUM_CLASSES]>, CliError> {
    Ok(cfg.optional(args.sample_counts, "sample_counts")?.map(|l| l.0))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    Ok(io::write_atomic(path, text.as_bytes())?)
}

fn class_map<T: serde::Serialize + Copy>(values: &[T; NUM_CLASSES]) -> serde_json::Map<String, serde_json::Value> {
    QualityClass::ALL.iter().map(|c| (c.name().to_string(), json!(values[c.code()]))).collect()
}

fn validate(args: ValidateArgs, cfg: &Config) -> Result<(), CliError> {
    let loaded = load(&args.dataset, &args.input, cfg)?;
    let ds = &loaded.dataset;
    let report = json!({
        "path": args.dataset.display().to_string(),
        "rows_read": loaded.rows_read,
        "valid": ds.len(),
        "dropped": loaded.dropped,
        "class_counts": class_map(&ds.class_counts()),
        "total_weight": ds.total_weight(),
    });
    let text = serde_json::to_string_pretty(&report).expect("json value") + "\n";
    if let Some(path) = &args.report {
        write(path, &text)?;
    }
    print!("{text}");
    Ok(())
}

fn weights(args: WeightsArgs, cfg: &Config) -> Result<(), CliError> {
    let population = population(&args.population, cfg)?;
    let sample = match &args.dataset {
        Some(path) => load(path, &args.input, cfg)?.dataset.class_counts(),
        None => sample_counts(&args.population, cfg)?.unwrap_or(BALANCED_SAMPLE_COUNTS),
    };
    let table = compute_weights(&sample, &population, zero_policy(&args.population, cfg)?)?;
    let text = io::weights_csv(&sample, &population, &table);
    match &args.out {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fit(args: FitArgs, cfg: &Config) -> Result<(), CliError> {
    let _seed: u64 = cfg.value(args.seed, "seed", 0)?;
    let dataset = load(&args.dataset, &args.input, cfg)?.dataset;
    let mut spec = ModelSpec::new(population(&args.population, cfg)?);
    spec.sample_counts = sample_counts(&args.population, cfg)?;
    spec.zero_population = zero_policy(&args.population, cfg)?;
    if cfg.flag(args.unweighted_pca, "unweighted_pca")? {
        spec.pca_weighting = PcaWeighting::Uniform;
    }
    spec.options.penalty = match cfg.choice(args.penalty, "penalty", PenaltyChoice::T)? {
        PenaltyChoice::T => Penalty::default(),
        PenaltyChoice::None => Penalty::None,
    };
    spec.options.max_iter = cfg.value(args.max_iter, "max_iter", spec.options.max_iter)?;
    let model = fit_quality_model(&dataset, &spec)?;
    io::write_model(&args.out, &model)?;
    let s = &model.ordinal.summary;
    if !s.converged {
        eprintln!("{}", json!({ "warning": "NotConverged", "iterations": s.iterations, "grad_norm": s.grad_norm }));
    }
    println!(
        "{}",
        json!({ "unit": model.unit, "n": s.n, "n_effective": s.n_effective, "loglik": s.loglik,
                "converged": s.converged, "iterations": s.iterations, "model": args.out.display().to_string() })
    );
    Ok(())
}

fn score(args: ScoreArgs, cfg: &Config) -> Result<(), CliError> {
    let draws = cfg.value(args.draws, "draws", MIN_DRAWS)?;
    if draws < MIN_DRAWS {
        return Err(CliError::usage(format!("--draws must be at least {MIN_DRAWS}")));
    }
    let seed = cfg.value(args.seed, "seed", 0)?;
    let model = io::read_model(&args.model)?;
    let dataset = load(&args.dataset, &args.input, cfg)?.dataset;
    let report = score_dataset(&dataset, &model, draws, seed)?;
    write(&args.out, &io::score_csv(&report))?;
    if let Some(path) = &args.thresholds_out {
        write(path, &io::thresholds_csv(&report))?;
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs, cfg: &Config) -> Result<(), CliError> {
    let population = population(&args.population, cfg)?;
    let dataset = load(&args.dataset, &args.input, cfg)?.dataset;
    let weighted = weight_for_population(
        &dataset,
        &population,
        sample_counts(&args.population, cfg)?,
        zero_policy(&args.population, cfg)?,
    )?;
    let mut models = Vec::new();
    for entry in &args.models {
        let (name, path) = match entry.split_once('=') {
            Some((name, path)) => (name.to_string(), PathBuf::from(path)),
            None => (stem(Path::new(entry)), PathBuf::from(entry)),
        };
        models.push((name, io::read_model(&path)?));
    }
    let bootstrap = match cfg.optional(args.bootstrap, "bootstrap")? {
        Some(replicates) => Some(Bootstrap { replicates, seed: cfg.value(args.seed, "seed", 0)? }),
        None => None,
    };
    let report = evaluate_models(&weighted, &population.unit, &models, bootstrap)?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| IoError::io(&args.out_dir, e))?;
    let accuracy = io::accuracy_csv(&report);
    write(&args.out_dir.join("accuracy.csv"), &accuracy)?;
    write(&args.out_dir.join("calibration.csv"), &io::calibration_csv(&report))?;
    write(&args.out_dir.join("calibration_plot.csv"), &io::calibration_plot_csv(&report))?;
    print!("{accuracy}");
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn compare(args: CompareArgs, cfg: &Config) -> Result<(), CliError> {
    let column = cfg.value(args.column.clone(), "column", "phi".to_string())?;
    let mut files = Vec::new();
    for path in &args.scores {
        files.push((path, io::read_scores(path)?));
    }
    let reference = &files[0].1;
    let index: std::collections::HashMap<&str, usize> =
        reference.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    if index.len() != reference.ids.len() {
        return Err(IoError::IdMismatch(format!("{} repeats an id", files[0].0.display())).into());
    }
    let mut measures: Vec<(String, Vec<f64>)> = Vec::new();
    for (path, scores) in &files {
        if scores.ids.len() != reference.ids.len() {
            return Err(IoError::IdMismatch(format!(
                "{} has {} rows, expected {}",
                path.display(),
                scores.ids.len(),
                reference.ids.len()
            ))
            .into());
        }
        let values = scores
            .column(&column)
            .ok_or_else(|| IoError::MissingColumn(format!("{column} (in {})", path.display())))?;
        let mut aligned = vec![f64::NAN; values.len()];
        for (id, &v) in scores.ids.iter().zip(values) {
            let slot = index
                .get(id.as_str())
                .ok_or_else(|| IoError::IdMismatch(format!("{} has unknown id `{id}`", path.display())))?;
            aligned[*slot] = v;
        }
        if aligned.iter().any(|v| v.is_nan()) {
            return Err(IoError::IdMismatch(format!("{} repeats an id", path.display())).into());
        }
        let mut name = stem(path);
        if measures.iter().any(|(n, _)| *n == name) {
            name = format!("{name}#{}", measures.len() + 1);
        }
        measures.push((name, aligned));
    }
    if cfg.flag(args.baselines, "baselines")? {
        for baseline in ["evenly_spaced", "mpqc"] {
            let values = reference.column(baseline).ok_or_else(|| IoError::MissingColumn(baseline.into()))?;
            measures.push((baseline.to_string(), values.to_vec()));
        }
    }
    let matrix = correlation_matrix(&measures)?;
    let text = io::correlation_csv(&matrix);
    match &args.out {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn synth(args: SynthArgs, cfg: &Config) -> Result<(), CliError> {
    let spec = GeneratorSpec {
        thresholds: cfg.value(args.thresholds, "thresholds", List(DEFAULT_THRESHOLDS))?.0,
        coefficients: cfg.value(args.coefficients, "coefficients", List(DEFAULT_COEFFICIENTS))?.0,
        kappa: cfg.value(args.kappa, "kappa", 50.0)?,
        n: cfg.value(args.n, "n", 1000)?,
        seed: cfg.value(args.seed, "seed", 0)?,
        fixed_features: None,
    };
    spec.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let synthetic = generate(&spec)?;
    io::write_dataset(&args.out, &synthetic.dataset)?;
    write(&args.truth, &io::truth_csv(&synthetic.truth))?;
    Ok(())
}
