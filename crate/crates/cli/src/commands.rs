use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pvt_core::dataset::{generate_synthetic, load_csv, Column, Dataset, Scaler};
use pvt_core::evaluation::plots::{
    andrews_rows, parallel_rows, rows_to_csv, scatter_matrix, DEFAULT_ANDREWS_SAMPLES,
};
use pvt_core::evaluation::{leverage_report, metrics, relevancy_report, Partition, PlotKind};
use pvt_core::numerics::write_history_csv;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::pipeline::{self, ModelFile};

#[derive(Debug, Parser)]
#[command(
    name = "pvt",
    version,
    about = "PV/T electrical-efficiency surrogate models"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic data set to CSV.
    Generate(GenerateArgs),
    /// Split, normalize, train one model and report its metrics.
    Train(TrainArgs),
    /// Predict electrical efficiency for every record of a CSV.
    Predict(ModelDataArgs),
    /// Error metrics of predictions against measurements.
    Evaluate(EvaluateArgs),
    /// Leverage and standardized-residual diagnostics (Williams plot data).
    Diagnose(DiagnoseArgs),
    /// Relevancy factor of each input to the target.
    Sensitivity(DataOutArgs),
    /// Andrews-curve, scatter-matrix and parallel-coordinate tables.
    Plotdata(PlotArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Number of records.
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Standard deviation of the noise added to the efficiency, in percent points.
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's data path.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ModelDataArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Measured data; its electrical_efficiency column is the reference.
    #[arg(long)]
    pub data: PathBuf,
    /// CSV of predictions in the same schema and record order.
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    pub predictions: Option<PathBuf>,
    /// Model to predict with instead of a predictions file.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Add a column of ones to the leverage design matrix.
    #[arg(long)]
    pub intercept: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DataOutArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotChoice {
    Andrews,
    Scatter,
    Parallel,
    All,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Normalize with this model's scaler instead of one fitted on the data.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PlotChoice::All)]
    pub kind: PlotChoice,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn load(path: &Path) -> CliResult<Dataset> {
    Ok(load_csv(path)?)
}

fn measured_targets(data: &Dataset, path: &Path) -> CliResult<Vec<f64>> {
    data.targets().map_err(|_| {
        CliError::Core(pvt_core::Error::Schema {
            position: Column::ALL.len() - 1,
            expected: Column::TARGET.name().to_string(),
            found: format!("missing values in {}", path.display()),
        })
    })
}

pub fn generate(args: &GenerateArgs) -> CliResult<String> {
    let data = generate_synthetic(args.n, args.seed, args.noise)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write(&args.out, &data.to_csv_string()?)?;
    Ok(format!(
        "wrote {} records to {}",
        data.len(),
        args.out.display()
    ))
}

pub fn train(args: &TrainArgs) -> CliResult<String> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(d) = &args.data {
        cfg.data = Some(d.clone());
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let data_path = cfg.data.clone().ok_or_else(|| {
        CliError::Usage("no data file: set \"data\" in the config or pass --data".into())
    })?;
    let data = load(&data_path)?;
    let out = pipeline::train(&cfg, &data)?;

    ensure_dir(&args.out)?;
    write(&args.out.join("model.json"), &out.model.to_json()?)?;
    write_json(&args.out.join("report.json"), &out.report)?;
    write_json(
        &args.out.join("timing.json"),
        &serde_json::json!({ "wall_seconds": out.wall_seconds }),
    )?;
    write(
        &args.out.join("predictions.csv"),
        &rows_to_csv(&out.predictions)?,
    )?;
    if !out.history.is_empty() {
        write_history_csv(&args.out.join("history.csv"), &out.history)?;
    }
    let m = &out.report.metrics;
    let r2 = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.4}"));
    Ok(format!(
        "{}: train R2 {} / test R2 {} / total RMSE {:.4}; outputs in {}",
        out.report.config.model.name(),
        r2(m.train.r2),
        r2(m.test.r2),
        m.total.rmse,
        args.out.display()
    ))
}

pub fn predict(args: &ModelDataArgs) -> CliResult<String> {
    let model = ModelFile::load(&args.model)?;
    let mut data = load(&args.data)?;
    let pred = model.predict(&data)?;
    for (r, p) in data.records.iter_mut().zip(&pred) {
        r.electrical_efficiency = Some(*p);
    }
    ensure_dir(&args.out)?;
    let path = args.out.join("predictions.csv");
    write(&path, &data.to_csv_string()?)?;
    Ok(format!(
        "wrote {} predictions to {}",
        pred.len(),
        path.display()
    ))
}

pub fn evaluate(args: &EvaluateArgs) -> CliResult<String> {
    let measured = load(&args.data)?;
    let y_exp = measured_targets(&measured, &args.data)?;
    let y_cal = match (&args.predictions, &args.model) {
        (Some(p), _) => {
            let pred = load(p)?;
            if pred.len() != measured.len() {
                return Err(CliError::Core(pvt_core::Error::DimensionMismatch {
                    expected: measured.len(),
                    found: pred.len(),
                }));
            }
            measured_targets(&pred, p)?
        }
        (None, Some(m)) => ModelFile::load(m)?.predict(&measured)?,
        (None, None) => return Err(CliError::Usage("pass --predictions or --model".into())),
    };
    let report = metrics(&y_exp, &y_cal, Partition::All)?;
    ensure_dir(&args.out)?;
    write_json(&args.out.join("report.json"), &report)?;
    Ok(format!(
        "n {} MSE {:.6} RMSE {:.6} R2 {}",
        report.n,
        report.mse,
        report.rmse,
        report.r2.map_or("undefined".into(), |v| format!("{v:.6}"))
    ))
}

pub fn diagnose(args: &DiagnoseArgs) -> CliResult<String> {
    let model = ModelFile::load(&args.model)?;
    let data = load(&args.data)?;
    let y_exp = measured_targets(&data, &args.data)?;
    let y_cal = model.predict(&data)?;
    let inputs = model.normalized_inputs(&data)?;
    let report = leverage_report(&inputs, &y_exp, &y_cal, args.intercept)?;
    ensure_dir(&args.out)?;
    write_json(&args.out.join("report.json"), &report)?;
    write(&args.out.join("williams.csv"), &report.to_csv_string()?)?;
    Ok(format!(
        "{} points, warning leverage {:.5} (quoted {}), residual outliers {:?}, leverage outliers {:?}",
        report.n,
        report.warning_leverage,
        report.quoted_warning_leverage,
        report.residual_outliers(),
        report.leverage_outliers()
    ))
}

pub fn sensitivity(args: &DataOutArgs) -> CliResult<String> {
    let data = load(&args.data)?;
    measured_targets(&data, &args.data)?;
    let report = relevancy_report(&data)?;
    ensure_dir(&args.out)?;
    write_json(&args.out.join("report.json"), &report)?;
    let lines: Vec<String> = report
        .factors
        .iter()
        .map(|f| format!("{} {:+.4}", f.column, f.r))
        .collect();
    Ok(lines.join("\n"))
}

pub fn plotdata(args: &PlotArgs) -> CliResult<String> {
    let data = load(&args.data)?;
    let scaler = match &args.model {
        Some(m) => ModelFile::load(m)?.scaler,
        None => Scaler::fit(&data)?,
    };
    let normalized = scaler.apply(&data)?;
    let kinds: Vec<PlotKind> = match args.kind {
        PlotChoice::Andrews => vec![PlotKind::Andrews],
        PlotChoice::Scatter => vec![PlotKind::ScatterMatrix],
        PlotChoice::Parallel => vec![PlotKind::ParallelCoords],
        PlotChoice::All => PlotKind::ALL.to_vec(),
    };
    ensure_dir(&args.out)?;
    let mut written = Vec::new();
    for kind in kinds {
        let text = match kind {
            PlotKind::Andrews => rows_to_csv(&andrews_rows(&normalized, DEFAULT_ANDREWS_SAMPLES)?)?,
            // scatter points stay in physical units
            PlotKind::ScatterMatrix => rows_to_csv(&scatter_matrix(&data)?.1)?,
            PlotKind::ParallelCoords => rows_to_csv(&parallel_rows(&normalized)?)?,
        };
        let path = args.out.join(kind.file_name());
        write(&path, &text)?;
        written.push(path.display().to_string());
    }
    Ok(format!("wrote {}", written.join(", ")))
}

pub fn execute(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Diagnose(a) => diagnose(a),
        Command::Sensitivity(a) => sensitivity(a),
        Command::Plotdata(a) => plotdata(a),
    }
}
