mod commands;

use boardcal::io::IoError;
use boardcal::pipeline::{MethodChoice, PipelineError};
use boardcal::sim::SimError;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Target-based LiDAR-camera extrinsic calibration.
#[derive(Debug, Parser)]
#[command(name = "boardcal", version)]
struct Cli {
    /// Worker threads for frame-level stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a ground-truthed dataset from a scenario.
    Simulate(SimulateArgs),
    /// Run the full pipeline on a dataset and write a report.
    Calibrate(CalibrateArgs),
    /// Score reports against truth: errors, detection PR curve, STD tables.
    Eval(EvalArgs),
    /// Convergence from perturbed initial rotations, with and without grid search.
    GridTrial(GridTrialArgs),
    /// Indirect-method projection error across band tolerances.
    AlphaSweep(AlphaSweepArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scenario TOML; omitted fields take their defaults.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario: default, noise-free, close, far, pr-mechanical, pr-mems.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of frames.
    #[arg(long)]
    frames: Option<usize>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Pipeline TOML; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// direct, indirect or both.
    #[arg(long)]
    method: Option<MethodChoice>,
    /// RANSAC seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Report path (default: <dataset>/report.json).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Dataset with truth; repeat once per report, in the same order.
    #[arg(long = "dataset", required = true)]
    datasets: Vec<PathBuf>,
    /// Report to score; repeat once per dataset.
    #[arg(long = "report", required = true)]
    reports: Vec<PathBuf>,
    /// Pipeline TOML used to rerun detection for the PR curve.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for errors.csv, pr_curve.csv and std.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GridTrialArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Half-width of the uniform per-axis rotation perturbation.
    #[arg(long, default_value_t = 10.0)]
    perturb_deg: f64,
    /// CSV with one row per trial and arm.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AlphaSweepArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Comma-separated band tolerances in meters.
    #[arg(long, value_delimiter = ',', default_values_t = default_alphas())]
    alphas: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

fn default_alphas() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 100.0).collect()
}

/// A failure with its exit code and machine-readable kind.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            kind,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new(2, "config", message)
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = match e {
            PipelineError::Config(_) => 2,
            PipelineError::NoDetections(_) => 3,
            PipelineError::AllZeroScores => 4,
            PipelineError::Diverged(_) => 5,
            PipelineError::Io(_) | PipelineError::Calibration(_) => 1,
        };
        Self::new(code, e.kind(), e.to_string())
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let kind = match e {
            IoError::Parse { .. } | IoError::Schema { .. } | IoError::UnsupportedVersion { .. } => {
                return Self::config(e.to_string())
            }
            IoError::MissingFile { .. } => "missing_file",
            IoError::Io { .. } => "io",
        };
        Self::new(1, kind, e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        Self::config(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            return report(Failure::config(format!("--threads: {e}")));
        }
    }
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Calibrate(a) => commands::calibrate(a),
        Command::Eval(a) => commands::eval(a),
        Command::GridTrial(a) => commands::grid_trial(a),
        Command::AlphaSweep(a) => commands::alpha_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> ExitCode {
    let payload = serde_json::json!({
        "error": f.kind,
        "message": f.message,
        "exit_code": f.code,
    });
    eprintln!("{payload}");
    ExitCode::from(f.code)
}
