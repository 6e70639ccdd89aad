use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fdrthresh::sim::ThetaKind;
use fdrthresh::{FdrConfig, ThresholdFamily};
use serde::{Deserialize, Serialize};

use crate::Invalid;

/// Everything that determines the numbers a run writes. The copy saved next
/// to the outputs holds only the sections the subcommand used, with every
/// default filled in.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub fdr: FdrConfig,
    #[serde(default = "default_family")]
    pub family: ThresholdFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<EstimateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curve: Option<CurveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSection>,
}

fn default_replicates() -> usize {
    200
}

fn default_family() -> ThresholdFamily {
    ThresholdFamily::Soft
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            replicates: default_replicates(),
            fdr: FdrConfig::default(),
            family: default_family(),
            estimate: None,
            curve: None,
            experiment: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Fdr,
    Fixed,
    Universal,
    SampleMean,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    pub input: Option<PathBuf>,
    /// Noise standard deviation; observations are divided by it before
    /// thresholding and the estimate is scaled back.
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default = "default_method")]
    pub method: Method,
    /// Level for `method = "fixed"`.
    pub lambda: Option<f64>,
    #[serde(default)]
    pub allow_non_smooth: bool,
}

fn one() -> f64 {
    1.0
}

fn default_method() -> Method {
    Method::Fdr
}

impl Default for EstimateSection {
    fn default() -> Self {
        Self {
            input: None,
            scale: 1.0,
            method: Method::Fdr,
            lambda: None,
            allow_non_smooth: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    /// R_G, the exact soft-threshold risk
    Rg,
    /// r_G, the surrogate risk with constant B0
    Surrogate,
    /// S_G, the probability of a rejection
    Sg,
    /// the nominal FDR curve
    Fdr,
    /// the smooth-rule risk bound with constant C0
    Smooth,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSection {
    pub prior: Option<PathBuf>,
    #[serde(default = "default_curve")]
    pub functional: CurveKind,
    /// Defaults to (8/α′₂) ∨ 2C₀².
    pub b0: Option<f64>,
    /// Defaults to the risk constant of the configured family.
    pub c0: Option<f64>,
    /// Defaults to √(2 log n) + 4.
    pub lambda_max: Option<f64>,
    #[serde(default = "default_points")]
    pub points: usize,
}

fn default_curve() -> CurveKind {
    CurveKind::Rg
}

fn default_points() -> usize {
    401
}

impl Default for CurveSection {
    fn default() -> Self {
        Self {
            prior: None,
            functional: CurveKind::Rg,
            b0: None,
            c0: None,
            lambda_max: None,
            points: default_points(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ExperimentKind {
    Regret,
    CommonMean,
    Minimax,
    Concentration,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Regret => "regret",
            Self::CommonMean => "common_mean",
            Self::Minimax => "minimax",
            Self::Concentration => "concentration",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default = "default_ns")]
    pub ns: Vec<usize>,
    /// Mean vector for regret and concentration runs.
    #[serde(default = "default_theta")]
    pub theta: ThetaKind,
    /// Common means in units of 1/√n.
    #[serde(default = "default_mus")]
    pub mus: Vec<f64>,
    #[serde(default = "one")]
    pub p: f64,
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default)]
    pub weak: bool,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
}

fn default_ns() -> Vec<usize> {
    vec![256, 1024, 4096]
}

fn default_theta() -> ThetaKind {
    ThetaKind::Spikes {
        count: 10,
        magnitude: 3.0,
    }
}

fn default_mus() -> Vec<f64> {
    vec![0.0, 0.3, 0.9, 2.0]
}

fn default_radii() -> Vec<f64> {
    vec![0.001, 0.01, 0.05]
}

fn default_lambdas() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

impl ExperimentSection {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            ns: default_ns(),
            theta: default_theta(),
            mus: default_mus(),
            p: 1.0,
            radii: default_radii(),
            weak: false,
            lambdas: default_lambdas(),
        }
    }
}

pub fn load(path: Option<&Path>) -> Result<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Invalid(format!("cannot read config {}: {e}", path.display())))?;
    let config: RunConfig = toml::from_str(&text)
        .map_err(|e| Invalid(format!("bad config {}: {e}", path.display())))?;
    Ok(config)
}

pub fn save(config: &RunConfig, dir: &Path) -> Result<()> {
    let text = toml::to_string_pretty(config).context("serializing resolved config")?;
    let path = dir.join("config.toml");
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}
