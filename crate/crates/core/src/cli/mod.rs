//! The `sri` command line: `demo`, `compute` and `decompose`.
//!
//! Exit codes: 0 success, 2 usage/configuration/input errors, 3 numerical
//! failures (model domain errors, violated decomposition bounds).

mod files;
mod report;
mod svg;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use thiserror::Error;

use crate::dataset::{self, Dataset, DatasetError, RngSeed};
use crate::expr::{self, ParseError, BENCHMARK_MODEL};
use crate::shapley::{self, ExplainError, Explanation, ShapConfig, ShapleyError, MAX_FEATURES};
use crate::sri::{self, SriError, SriResult};

pub use files::{read_interactions_csv, read_shap_csv, write_interactions_csv, write_shap_csv};
pub use report::{render_table, Report, ReportMeta};
pub use svg::heatmap_svg;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Default seed of the `demo` command.
pub const DEFAULT_SEED: u64 = 42;

/// Below this many observations the demo warns that the estimates are noisy.
pub const LOW_SAMPLE_WARNING: usize = 100;

/// Largest tolerated `|phi_ij - phi_ji|` in externally supplied tensors.
pub const SYMMETRY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<ParseError> for CliError {
    fn from(e: ParseError) -> Self {
        CliError::Config(format!("model: {e}"))
    }
}

impl From<ShapleyError> for CliError {
    fn from(e: ShapleyError) -> Self {
        match e {
            ShapleyError::Background { .. } | ShapleyError::Point(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<ExplainError> for CliError {
    fn from(e: ExplainError) -> Self {
        match e {
            ExplainError::Setup(inner) => inner.into(),
            ExplainError::Observations(_) => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<SriError> for CliError {
    fn from(e: SriError) -> Self {
        match e {
            SriError::Violation { .. } => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("I/O error: {e}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

/// Parsed command line.
#[derive(Debug, Parser)]
#[command(
    name = "sri",
    version,
    about = "Exact SHAP values and synergy/redundancy/independence decomposition"
)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the duplicated-feature benchmark and decompose its model.
    Demo(DemoArgs),
    /// Explain a model over a CSV dataset and decompose the result.
    Compute(ComputeArgs),
    /// Decompose precomputed SHAP values and interaction values.
    Decompose(DecomposeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output directory; created if missing (its parent must exist).
    #[arg(short = 'o', long = "out", default_value = "out")]
    pub out: PathBuf,
    /// Artifacts to write.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Format::Csv, Format::Json, Format::Svg])]
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone, Args)]
pub struct ComputeOptions {
    /// Background rows sampled for marginal expectations (default: all rows).
    #[arg(long = "background")]
    pub background: Option<usize>,
    /// Worker threads over observations (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Refuse models with more features than this.
    #[arg(long = "max-features", default_value_t = MAX_FEATURES)]
    pub max_features: usize,
}

#[derive(Debug, Clone, Args)]
pub struct DemoArgs {
    /// Number of observations.
    #[arg(long, default_value_t = 1000)]
    pub m: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub compute: ComputeOptions,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ComputeArgs {
    /// Model expression, e.g. "x1 * x2 + sin(x3)".
    #[arg(
        long,
        conflicts_with = "model_file",
        required_unless_present = "model_file"
    )]
    pub model: Option<String>,
    /// File containing the model expression.
    #[arg(long = "model-file")]
    pub model_file: Option<PathBuf>,
    /// Observations, one row per line.
    #[arg(long)]
    pub data: PathBuf,
    /// The data file starts with a header row of feature names.
    #[arg(long)]
    pub header: bool,
    /// Seed for background sampling.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Also write shap.csv and interactions.csv.
    #[arg(long = "export-shap")]
    pub export_shap: bool,
    #[command(flatten)]
    pub compute: ComputeOptions,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DecomposeArgs {
    /// SHAP matrix CSV with a header row (as written by --export-shap).
    #[arg(long)]
    pub shap: PathBuf,
    /// Interaction tensor CSV in long format `u,i,j,value` (1-based indices).
    #[arg(long)]
    pub interactions: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &config.command {
        Command::Demo(a) => cmd_demo(a),
        Command::Compute(a) => cmd_compute(a),
        Command::Decompose(a) => cmd_decompose(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn prepare_output_dir(dir: &Path) -> Result<(), CliError> {
    if dir.is_dir() {
        return Ok(());
    }
    fs::create_dir(dir).map_err(|e| {
        CliError::Config(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        ))
    })
}

/// SHAP explanation followed by the S/R/I decomposition.
pub fn explain_and_decompose(
    model: &expr::ModelExpr,
    data: &Dataset,
    background: &dataset::BackgroundSet,
    config: &ShapConfig,
) -> Result<(Explanation, SriResult), CliError> {
    let explanation = shapley::explain_dataset(model, data, background, config)?;
    let result = sri::decompose_all(&explanation.shap, &explanation.interactions)?;
    Ok((explanation, result))
}

/// Benchmark pipeline behind `sri demo`: synthetic data, full or sampled
/// background, the duplicated-feature model.
pub fn demo_pipeline(
    m: usize,
    seed: u64,
    background: Option<usize>,
    config: &ShapConfig,
) -> Result<(Dataset, Explanation, SriResult), CliError> {
    if m == 0 {
        return Err(CliError::Config("--m must be at least 1".into()));
    }
    let data = dataset::generate_paper_dataset(m, RngSeed(seed))?;
    let bg = dataset::sample_background(&data, background.unwrap_or(m), RngSeed(seed))?;
    let model = expr::parse_model(BENCHMARK_MODEL, 5)?;
    let (explanation, result) = explain_and_decompose(&model, &data, &bg, config)?;
    Ok((data, explanation, result))
}

fn shap_config(opts: &ComputeOptions) -> Result<ShapConfig, CliError> {
    if opts.max_features == 0 || opts.max_features > MAX_FEATURES {
        return Err(CliError::Config(format!(
            "--max-features must be between 1 and {MAX_FEATURES}"
        )));
    }
    Ok(ShapConfig {
        max_features: opts.max_features,
        workers: opts.workers,
    })
}

fn undefined_warnings(result: &SriResult, names: &[String]) -> Vec<String> {
    let mut by_feature: Vec<usize> = result.undefined_pairs.iter().map(|&(i, _)| i).collect();
    by_feature.dedup();
    by_feature
        .into_iter()
        .map(|i| {
            format!(
                "{} has an all-zero SHAP vector; its pairs are undefined",
                names[i]
            )
        })
        .collect()
}

fn write_outputs(out: &OutputArgs, report: &Report, result: &SriResult) -> Result<(), CliError> {
    if out.formats.contains(&Format::Csv) {
        for (name, matrix) in [
            ("S", &result.synergy),
            ("R", &result.redundancy),
            ("I", &result.independence),
        ] {
            fs::write(
                out.out.join(format!("{name}.csv")),
                files::matrix_csv(matrix, &report.features),
            )?;
        }
    }
    if out.formats.contains(&Format::Json) {
        fs::write(out.out.join("report.json"), report.to_json())?;
    }
    if out.formats.contains(&Format::Svg) {
        for (name, title, matrix) in [
            ("S", "Synergy S_ij", &result.synergy),
            ("R", "Redundancy R_ij", &result.redundancy),
            ("I", "Independence I_ij", &result.independence),
        ] {
            fs::write(
                out.out.join(format!("{name}.svg")),
                heatmap_svg(title, &report.features, matrix),
            )?;
        }
    }
    Ok(())
}

fn finish(out: &OutputArgs, report: &Report, result: &SriResult) -> Result<(), CliError> {
    for w in &report.warnings {
        warn!("{w}");
        eprintln!("warning: {w}");
    }
    write_outputs(out, report, result)?;
    print!("{}", render_table(result, &report.features));
    info!("wrote outputs to {}", out.out.display());
    Ok(())
}

pub fn cmd_demo(args: &DemoArgs) -> Result<(), CliError> {
    let config = shap_config(&args.compute)?;
    prepare_output_dir(&args.output.out)?;
    let k = args.compute.background.unwrap_or(args.m);
    info!(
        "demo: m = {}, seed = {}, background = {k}",
        args.m, args.seed
    );
    let (data, _explanation, result) =
        demo_pipeline(args.m, args.seed, args.compute.background, &config)?;

    let mut warnings = Vec::new();
    if args.m < LOW_SAMPLE_WARNING {
        warnings.push(format!(
            "only {} observations; S/R/I values from fewer than {LOW_SAMPLE_WARNING} samples are unstable",
            args.m
        ));
    }
    warnings.extend(undefined_warnings(&result, data.feature_names()));
    let report = Report::new(
        &result,
        data.feature_names(),
        ReportMeta {
            command: "demo",
            model: Some(BENCHMARK_MODEL.to_string()),
            m: data.n_rows(),
            seed: Some(args.seed),
            background: Some(k),
        },
        warnings,
    );
    finish(&args.output, &report, &result)?;
    println!("(values rounded to 2 decimals; unrounded values are in report.json)");
    Ok(())
}

pub fn cmd_compute(args: &ComputeArgs) -> Result<(), CliError> {
    let config = shap_config(&args.compute)?;
    prepare_output_dir(&args.output.out)?;
    let text = match (&args.model, &args.model_file) {
        (Some(text), _) => text.clone(),
        (None, Some(path)) => fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read model file {}: {e}", path.display()))
        })?,
        (None, None) => {
            return Err(CliError::Config(
                "one of --model or --model-file is required".into(),
            ))
        }
    };
    let data = dataset::load_csv(&args.data, args.header)?;
    let model = expr::parse_model(text.trim(), data.n_cols())?;
    let k = args.compute.background.unwrap_or(data.n_rows());
    let bg = dataset::sample_background(&data, k, RngSeed(args.seed))?;
    info!(
        "compute: m = {}, n = {}, background = {k}",
        data.n_rows(),
        data.n_cols()
    );

    let (explanation, result) = explain_and_decompose(&model, &data, &bg, &config)?;
    if args.export_shap {
        fs::write(
            args.output.out.join("shap.csv"),
            write_shap_csv(&explanation.shap, data.feature_names()),
        )?;
        fs::write(
            args.output.out.join("interactions.csv"),
            write_interactions_csv(&explanation.interactions),
        )?;
    }
    let report = Report::new(
        &result,
        data.feature_names(),
        ReportMeta {
            command: "compute",
            model: Some(model.to_string()),
            m: data.n_rows(),
            seed: Some(args.seed),
            background: Some(k),
        },
        undefined_warnings(&result, data.feature_names()),
    );
    finish(&args.output, &report, &result)
}

pub fn cmd_decompose(args: &DecomposeArgs) -> Result<(), CliError> {
    prepare_output_dir(&args.output.out)?;
    let (shap, names) = read_shap_csv(&args.shap)?;
    let inter = read_interactions_csv(&args.interactions, shap.n_obs(), shap.n_features())?;
    let (asym, (u, i, j)) = inter.max_asymmetry();
    if asym.is_nan() || asym > SYMMETRY_TOL {
        return Err(CliError::Config(format!(
            "interaction tensor is not symmetric: observation {} has phi_{}{} - phi_{}{} = {asym:e} (tolerance {SYMMETRY_TOL:e})",
            u + 1,
            i + 1,
            j + 1,
            j + 1,
            i + 1
        )));
    }
    let result = sri::decompose_all(&shap, &inter)?;
    let report = Report::new(
        &result,
        &names,
        ReportMeta {
            command: "decompose",
            model: None,
            m: shap.n_obs(),
            seed: None,
            background: None,
        },
        undefined_warnings(&result, &names),
    );
    finish(&args.output, &report, &result)
}
