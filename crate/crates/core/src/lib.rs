//! FDR-driven adaptive threshold estimation of a Gaussian mean vector.
//!
//! Observations `X_i ~ N(θ_i, 1)` are denoised by a threshold rule
//! `t_λ(X_i)` whose level λ is picked from the data by the Benjamini–Hochberg
//! step-up level and a matched step-down level. The crate also provides the
//! exact Gaussian risk of soft thresholding under an empirical prior, optimal
//! fixed levels for comparison, and a seeded Monte Carlo harness.
//!
//! ```
//! use fdrthresh::{fdr_threshold_estimate, FdrConfig, ThresholdFamily};
//!
//! let x = [3.0, -1.7, 1.5, 0.2];
//! let config = FdrConfig::with_levels(0.2, 0.1, 0.3, 0.05).unwrap();
//! let report = fdr_threshold_estimate(&x, ThresholdFamily::Soft, &config).unwrap();
//! assert!((report.lambda_used - 1.4395314709).abs() < 1e-9);
//! assert_eq!(report.estimate[3], 0.0);
//! ```

// `!(x > 0.0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod ext_real;
pub mod fdr;
pub mod gauss;
pub mod risk;
pub mod sim;
pub mod threshold;

pub use error::{Error, Result};
pub use estimator::{
    fdr_threshold_estimate, fdr_threshold_estimate_with, fixed_threshold_estimate,
    sample_mean_estimate, universal_level, EstimateReport, Theory,
};
pub use fdr::{
    candidate_levels, certify_g1, exceed_count, select_lambda, step_down_level, step_up_level,
    FdrConfig, G1Transform, Levels, Selector, SelectorTrace,
};
pub use gauss::{
    critical_z, log_normal_cdf, normal_cdf, normal_pdf, normal_quantile, normal_quantile_ext,
    normal_sf, tilted_exp_moment, truncated_moments,
};
pub use risk::{
    bayes_risk_soft, default_lambda_max, diagnostic_constants, fdr_curve, optimal_levels,
    population_fdr_levels, rejection_prob, rho_g, risk_curve, risk_soft_point, smooth_risk_bound,
    surrogate_risk, DiagnosticConstants, EmpiricalPrior, FdrCurveValue, Functional, OptimalLevels,
    RiskCurve,
};
pub use sim::{McEstimate, ThetaGenerator};
pub use threshold::{
    firm, hard, mcp_gamma, mcp_penalty, plse_local_minima, soft, LinearPiece, PenalizedFit,
    ThresholdFamily, ThresholdKind,
};
