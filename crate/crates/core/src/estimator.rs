//! End-to-end estimators of the mean vector.

use serde::Serialize;

use crate::error::{domain, Result};
use crate::fdr::{select_lambda, FdrConfig, SelectorTrace};
use crate::threshold::ThresholdFamily;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub estimate: Vec<f64>,
    /// The level applied; +∞ when nothing was rejected. NaN for estimators
    /// that are not threshold rules.
    #[serde(with = "crate::ext_real")]
    pub lambda_used: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selector_trace: Option<SelectorTrace>,
    pub family: Option<ThresholdFamily>,
}

/// Whether a rule outside the smooth class may be paired with the FDR level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Theory {
    #[default]
    Smooth,
    AllowNonSmooth,
}

/// θ̂ = t_λ̂(X) with λ̂ from the FDR selector.
///
/// The hard rule is refused; use [`fdr_threshold_estimate_with`] and
/// [`Theory::AllowNonSmooth`] to run it anyway.
pub fn fdr_threshold_estimate(
    x: &[f64],
    family: ThresholdFamily,
    config: &FdrConfig,
) -> Result<EstimateReport> {
    fdr_threshold_estimate_with(x, family, config, Theory::Smooth)
}

pub fn fdr_threshold_estimate_with(
    x: &[f64],
    family: ThresholdFamily,
    config: &FdrConfig,
    theory: Theory,
) -> Result<EstimateReport> {
    family.validate()?;
    if !family.is_smooth() && theory == Theory::Smooth {
        return domain(
            "the hard threshold is outside the smooth class; pass Theory::AllowNonSmooth to use it",
        );
    }
    let trace = select_lambda(x, config)?;
    let lambda = trace.lambda_hat;
    Ok(EstimateReport {
        estimate: family.apply(x, lambda)?,
        lambda_used: lambda,
        selector_trace: Some(trace),
        family: Some(family),
    })
}

/// t_λ(X) at a fixed level.
pub fn fixed_threshold_estimate(
    x: &[f64],
    family: ThresholdFamily,
    lambda: f64,
) -> Result<EstimateReport> {
    Ok(EstimateReport {
        estimate: family.apply(x, lambda)?,
        lambda_used: lambda,
        selector_trace: None,
        family: Some(family),
    })
}

/// √(2 log n).
pub fn universal_level(n: usize) -> f64 {
    (2.0 * (n.max(1) as f64).ln()).sqrt()
}

/// Every coordinate replaced by the sample mean.
pub fn sample_mean_estimate(x: &[f64]) -> Result<EstimateReport> {
    if x.is_empty() {
        return domain("empty observation vector");
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    Ok(EstimateReport {
        estimate: vec![mean; x.len()],
        lambda_used: f64::NAN,
        selector_trace: None,
        family: None,
    })
}
