use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dqaem::experiments::{GridAxis, ParamSelector};
use dqaem::{InitCovariance, Mode};

#[derive(Debug, Parser)]
#[command(
    name = "dqaem",
    version,
    about = "Gaussian mixture fitting with EM, DSAEM and DQAEM"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a labelled dataset and write it as CSV plus a ground-truth JSON.
    GenData(GenDataArgs),
    /// Fit a mixture to a CSV dataset.
    Fit(FitArgs),
    /// Compare success ratios of several estimators over shared random inits.
    Benchmark(BenchmarkArgs),
    /// Evaluate the negative free energy over a 2-d parameter grid.
    Landscape(LandscapeArgs),
    /// Error of the product-formula diagonal against the exact exponential.
    TrotterCheck(TrotterArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration; command-line flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Omit the `generated_at` field from JSON outputs.
    #[arg(long)]
    pub no_timestamp: bool,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// Number of components.
    #[arg(long)]
    pub k: Option<usize>,
    /// Dimension.
    #[arg(long)]
    pub d: Option<usize>,
    /// Number of points.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(short, long, value_name = "CSV")]
    pub output: PathBuf,
    /// Ground-truth JSON path [default: output with extension `truth.json`].
    #[arg(long, value_name = "JSON")]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    #[arg(long, value_parser = clap::value_parser!(Mode))]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub beta0: Option<f64>,
    #[arg(long)]
    pub gamma0: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    /// Hold beta at beta0 instead of annealing it to 1.
    #[arg(long)]
    pub beta_fixed: bool,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(short, long, value_name = "CSV")]
    pub input: PathBuf,
    #[arg(short, long, value_name = "JSON")]
    pub output: PathBuf,
    /// Number of components [default: 7].
    #[arg(long)]
    pub k: Option<usize>,
    /// Seed for the random initialization and component reseeding.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Start from these parameters (JSON) instead of a random init.
    #[arg(long, value_name = "JSON")]
    pub init: Option<PathBuf>,
    /// Initial covariance: `global` or a positive isotropic variance [default: global].
    #[arg(long, value_parser = parse_init_covariance)]
    pub init_var: Option<InitCovariance>,
    /// Update only the means.
    #[arg(long)]
    pub means_only: bool,
    #[command(flatten)]
    pub schedule: ScheduleArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(short, long, value_name = "CSV")]
    pub input: PathBuf,
    #[arg(short, long, value_name = "JSON")]
    pub output: PathBuf,
    /// Also write the table to this file.
    #[arg(long, value_name = "TXT")]
    pub table: Option<PathBuf>,
    /// Number of components [default: 7].
    #[arg(long)]
    pub k: Option<usize>,
    /// [default: 300]
    #[arg(long)]
    pub trials: Option<usize>,
    /// Estimators to compare [default: em,dsaem,dqaem].
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(Mode))]
    pub modes: Option<Vec<Mode>>,
    /// Root seed [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads [default: all cores].
    #[arg(long, env = "DQAEM_JOBS")]
    pub jobs: Option<usize>,
    /// Success threshold in nats [default: 1.0].
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Initial beta of DSAEM [default: 0.7].
    #[arg(long)]
    pub beta0: Option<f64>,
    /// Initial gamma of DQAEM [default: 1.2].
    #[arg(long)]
    pub gamma0: Option<f64>,
    /// Decay constant shared by both annealed schedules [default: 0.95].
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Initial covariance: `global` or a positive isotropic variance [default: 0.7].
    #[arg(long, value_parser = parse_init_covariance)]
    pub init_var: Option<InitCovariance>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct LandscapeArgs {
    /// Dataset; without it the built-in two-component barrier instance is used.
    #[arg(short, long, value_name = "CSV", requires = "params")]
    pub input: Option<PathBuf>,
    /// Base parameters (JSON) whose two selected entries are varied.
    #[arg(long, value_name = "JSON")]
    pub params: Option<PathBuf>,
    /// First varied entry, `mean:K:J` or `var:K:J`.
    #[arg(long, value_parser = clap::value_parser!(ParamSelector))]
    pub x: Option<ParamSelector>,
    #[arg(long, value_parser = clap::value_parser!(ParamSelector))]
    pub y: Option<ParamSelector>,
    /// `START:STOP:POINTS`
    #[arg(long, allow_hyphen_values = true, value_parser = clap::value_parser!(GridAxis))]
    pub x_range: Option<GridAxis>,
    #[arg(long, allow_hyphen_values = true, value_parser = clap::value_parser!(GridAxis))]
    pub y_range: Option<GridAxis>,
    /// [default: 1.0]
    #[arg(long)]
    pub beta: Option<f64>,
    /// [default: 0.0]
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(short, long, value_name = "CSV")]
    pub output: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct TrotterArgs {
    /// Classical energies [default: 0.5,1.0,2.0].
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub energies: Option<Vec<f64>>,
    /// [default: 1.0]
    #[arg(long)]
    pub beta: Option<f64>,
    /// [default: 0.8]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Slice counts [default: 16,64,256,1024].
    #[arg(long, value_delimiter = ',')]
    pub slices: Option<Vec<usize>>,
    #[arg(short, long, value_name = "CSV")]
    pub output: PathBuf,
    #[command(flatten)]
    pub common: CommonArgs,
}

pub fn parse_init_covariance(s: &str) -> Result<InitCovariance, String> {
    if s.eq_ignore_ascii_case("global") {
        return Ok(InitCovariance::Global);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(InitCovariance::Isotropic(v)),
        _ => Err(format!(
            "expected `global` or a positive variance, got `{s}`"
        )),
    }
}
