//! `fdrthresh`: adaptive threshold estimates, risk curves and simulation
//! experiments from the command line.
//!
//! Exit status is 0 on success, 2 when the input or configuration is
//! invalid, and 3 when a run fails for any other reason.

mod commands;
mod config;
mod io;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{CurveKind, ExperimentKind, Method};

/// A problem with what the user supplied, as opposed to a failed run.
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Parser)]
#[command(
    name = "fdrthresh",
    version,
    about = "FDR-driven adaptive thresholding of Gaussian means"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
pub struct Common {
    /// TOML run configuration; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed of the Monte Carlo streams
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo replicates per configuration
    #[arg(long, global = true)]
    replicates: Option<usize>,
    /// Output directory, created if missing
    #[arg(long, global = true, default_value = "fdrthresh-out")]
    out: PathBuf,
    /// Outputs to write
    #[arg(
        long,
        global = true,
        value_enum,
        value_delimiter = ',',
        default_value = "csv,json,svg"
    )]
    format: Vec<Format>,
    /// No progress lines on stderr
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Subcommand)]
enum Command {
    /// Denoise an observation vector
    Estimate(EstimateArgs),
    /// Tabulate a risk functional of an empirical prior over λ
    RiskCurve(RiskCurveArgs),
    /// Tabulate the nominal FDR curve of an empirical prior
    FdrCurve(CurveArgs),
    /// Run a seeded Monte Carlo experiment
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyName {
    Soft,
    Hard,
    Firm,
    Interpolated,
}

#[derive(Args)]
pub struct FamilyArgs {
    /// Threshold rule
    #[arg(long, value_enum)]
    family: Option<FamilyName>,
    /// Slope constant of the firm and interpolated rules
    #[arg(long, default_value_t = 1.5)]
    kappa0: f64,
    /// Weight on the firm rule for the interpolated rule
    #[arg(long, default_value_t = 0.5)]
    weight: f64,
}

#[derive(Args)]
pub struct LevelArgs {
    /// Nominal rate of the step-up rule
    #[arg(long)]
    alpha1: Option<f64>,
    /// Nominal rate of the step-down rule
    #[arg(long)]
    alpha2: Option<f64>,
    /// Reference rate above alpha1
    #[arg(long)]
    alpha1p: Option<f64>,
    /// Reference rate below alpha2
    #[arg(long)]
    alpha2p: Option<f64>,
    /// Position of λ̂ between the two FDR levels, in [0, 1]
    #[arg(long)]
    interp: Option<f64>,
}

#[derive(Args)]
pub struct EstimateArgs {
    /// Observation vector: text with one value per line, or binary
    input: Option<PathBuf>,
    /// Noise standard deviation of the observations
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<Method>,
    /// Level for --method fixed
    #[arg(long)]
    lambda: Option<f64>,
    /// Permit the hard rule with the FDR level
    #[arg(long)]
    allow_non_smooth: bool,
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    levels: LevelArgs,
}

#[derive(Args)]
pub struct CurveArgs {
    /// Prior atoms, one per line, optionally `atom,weight`
    prior: Option<PathBuf>,
    /// Right end of the λ grid
    #[arg(long)]
    lambda_max: Option<f64>,
    /// Number of grid points
    #[arg(long)]
    points: Option<usize>,
    #[command(flatten)]
    levels: LevelArgs,
}

#[derive(Args)]
pub struct RiskCurveArgs {
    #[command(flatten)]
    curve: CurveArgs,
    #[arg(long, value_enum)]
    functional: Option<CurveKind>,
    /// Constant of the surrogate risk
    #[arg(long)]
    b0: Option<f64>,
    /// Risk constant of the smooth bound
    #[arg(long)]
    c0: Option<f64>,
    #[command(flatten)]
    family: FamilyArgs,
}

#[derive(Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    kind: Option<ExperimentKind>,
    /// Dimensions to run
    #[arg(long = "n", value_delimiter = ',')]
    ns: Vec<usize>,
    /// Common means in units of 1/√n
    #[arg(long = "mu", value_delimiter = ',')]
    mus: Vec<f64>,
    /// Exponent of the ℓ_p ball
    #[arg(long)]
    p: Option<f64>,
    /// Radii of the ℓ_p ball
    #[arg(long = "radius", value_delimiter = ',')]
    radii: Vec<f64>,
    /// Use the weak ℓ_p ball
    #[arg(long)]
    weak: bool,
    /// Fixed levels for the concentration check
    #[arg(long = "lambda", value_delimiter = ',')]
    lambdas: Vec<f64>,
    #[command(flatten)]
    family: FamilyArgs,
    #[command(flatten)]
    levels: LevelArgs,
}

fn is_validation(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        e.is::<Invalid>()
            || matches!(e.downcast_ref::<fdrthresh::Error>(), Some(c) if !matches!(c, fdrthresh::Error::NoConvergence(_)))
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command, &cli.common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_validation(&err) { 2 } else { 3 })
        }
    }
}
