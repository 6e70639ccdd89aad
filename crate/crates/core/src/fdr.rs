//! Data-driven threshold levels: the Benjamini–Hochberg step-up level ξ̂₁,
//! the matched step-down level ξ̂₂, and the admissible interval for λ̂.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::gauss::{normal_quantile, normal_sf};
use crate::risk::risk_soft_unchecked;

/// Candidate levels ξ_k = -Φ⁻¹(αk/(2n)), k = 1..=n.
///
/// Entries with αk/(2n) ≥ 1/2 would be negative and are clamped to zero;
/// for α < 1 this never happens.
pub fn candidate_levels(n: usize, alpha: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return domain("candidate levels need n >= 1");
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return domain(format!("FDR level must lie in (0, 1), got {alpha}"));
    }
    let scale = alpha / (2.0 * n as f64);
    (1..=n)
        .map(|k| {
            let p = scale * k as f64;
            if p >= 0.5 {
                Ok(0.0)
            } else {
                normal_quantile(p).map(|q| -q)
            }
        })
        .collect()
}

/// N(t) = #{i : |x_i| ≥ t}.
pub fn exceed_count(x: &[f64], t: f64) -> usize {
    x.iter().filter(|v| v.abs() >= t).count()
}

/// The lower-endpoint transform g₁ applied to ξ̂₁.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum G1Transform {
    /// g(x) = x, certified with M₀ = 4, c₁ = 2, c₂ = 0.
    #[default]
    Identity,
    /// g(x) = √(x² - 2a·log(1 ∨ x)) with 0 ≤ a ≤ 1, certified with the
    /// stated M₀ and c₁ = 2 - a, c₂ = 0.
    LogShrink { a: f64, m0: f64 },
}

impl G1Transform {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Self::Identity => x,
            Self::LogShrink { a, .. } => {
                if x.is_infinite() {
                    x
                } else {
                    (x * x - 2.0 * a * x.max(1.0).ln()).max(0.0).sqrt()
                }
            }
        }
    }

    /// (M₀, c₁, c₂)
    pub fn constants(&self) -> (f64, f64, f64) {
        match *self {
            Self::Identity => (4.0, 2.0, 0.0),
            Self::LogShrink { a, m0 } => (m0, 2.0 - a, 0.0),
        }
    }

    /// Checks the transform's conditions on the certification grid.
    pub fn certify(&self) -> Result<()> {
        if let Self::LogShrink { a, m0 } = *self {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::InvalidConfig(format!(
                    "log-shrink exponent must lie in [0, 1], got {a}"
                )));
            }
            if !(m0 > 0.0 && m0.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "M0 must be positive, got {m0}"
                )));
            }
        }
        let (m0, c1, c2) = self.constants();
        certify_g1(|x| self.apply(x), m0, c1, c2)
    }
}

/// Grid x = 0.01, 0.02, …, 30 used by [`certify_g1`].
pub const CERTIFICATE_GRID: (f64, usize) = (0.01, 3000);

/// Numerically checks, on [`CERTIFICATE_GRID`], that
/// 0 ≤ g(x) ≤ x, 0 ≤ g′(x) ≤ M₀ (by finite differences), and
/// R(0, g(x)) ≤ min{4Φ(-x), M₀Φ(-x)/((x^{c₁} + 2)(1 ∨ log x)^{c₂})}.
/// Reports the first violating grid point.
pub fn certify_g1(g: impl Fn(f64) -> f64, m0: f64, c1: f64, c2: f64) -> Result<()> {
    if !(c1 > 0.0 && c1 <= 2.0) || c2.abs() > m0 || (c1 == 2.0 && c2 > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "exponents c1 = {c1}, c2 = {c2} are not admissible with M0 = {m0}"
        )));
    }
    let (step, count) = CERTIFICATE_GRID;
    let rel = 1e-9;
    let mut prev: Option<(f64, f64)> = None;
    for i in 1..=count {
        let x = i as f64 * step;
        let gx = g(x);
        let fail = |reason: String| Err(Error::Certificate { x, reason });
        if !(gx >= 0.0 && gx <= x * (1.0 + 1e-15)) {
            return fail(format!("g(x) = {gx} is outside [0, x]"));
        }
        if let Some((px, pg)) = prev {
            let slope = (gx - pg) / (x - px);
            if slope < -1e-12 || slope > m0 * (1.0 + rel) {
                return fail(format!("slope {slope} is outside [0, {m0}]"));
            }
        }
        prev = Some((x, gx));
        let risk = risk_soft_unchecked(0.0, gx);
        let tail = normal_sf(x);
        let bound = (4.0 * tail).min(m0 * tail / ((x.powf(c1) + 2.0) * x.ln().max(1.0).powf(c2)));
        if risk > bound * (1.0 + rel) {
            return fail(format!("R(0, g(x)) = {risk:e} exceeds {bound:e}"));
        }
    }
    Ok(())
}

/// Nominal levels α₁, α₂ of the two rules, reference levels α′₁, α′₂,
/// inflation exponents δ₁ ≤ δ₂, the g₁ transform, and the position of λ̂
/// inside its admissible interval (0 = lower end, 1 = upper end).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FdrConfig {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha1p: f64,
    pub alpha2p: f64,
    #[serde(default)]
    pub delta1: f64,
    #[serde(default)]
    pub delta2: f64,
    #[serde(default)]
    pub g1: G1Transform,
    #[serde(default)]
    pub interp: f64,
}

impl Default for FdrConfig {
    fn default() -> Self {
        Self {
            alpha1: 0.45,
            alpha2: 0.45,
            alpha1p: 0.6,
            alpha2p: 0.3,
            delta1: 0.0,
            delta2: 0.0,
            g1: G1Transform::Identity,
            interp: 0.0,
        }
    }
}

impl FdrConfig {
    /// Config with the given levels, δ₁ = δ₂ = 0, identity g₁ and λ̂ at the
    /// lower end.
    pub fn with_levels(alpha1: f64, alpha2: f64, alpha1p: f64, alpha2p: f64) -> Result<Self> {
        let config = Self {
            alpha1,
            alpha2,
            alpha1p,
            alpha2p,
            ..Self::default()
        };
        config.validate()?;
        Ok(config)
    }

    /// Requires 0 < α′₂ < α₂ ≤ α₁ < α′₁ < 1, 0 ≤ δ₁ ≤ δ₂, interp ∈ [0, 1]
    /// and a certified g₁.
    pub fn validate(&self) -> Result<()> {
        let Self {
            alpha1,
            alpha2,
            alpha1p,
            alpha2p,
            delta1,
            delta2,
            interp,
            ..
        } = *self;
        if !(0.0 < alpha2p
            && alpha2p < alpha2
            && alpha2 <= alpha1
            && alpha1 < alpha1p
            && alpha1p < 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "need 0 < alpha2' < alpha2 <= alpha1 < alpha1' < 1, got alpha1 = {alpha1}, alpha2 = {alpha2}, \
                 alpha1' = {alpha1p}, alpha2' = {alpha2p}"
            )));
        }
        if !(0.0 <= delta1 && delta1 <= delta2 && delta2.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "need 0 <= delta1 <= delta2 < inf, got delta1 = {delta1}, delta2 = {delta2}"
            )));
        }
        if !(0.0..=1.0).contains(&interp) {
            return Err(Error::InvalidConfig(format!(
                "interp must lie in [0, 1], got {interp}"
            )));
        }
        if self.g1 != G1Transform::Identity {
            self.g1.certify()?;
        }
        Ok(())
    }

    /// B₀ = (8/α′₂) ∨ (2C₀²).
    pub fn default_b0(&self, c0: f64) -> f64 {
        (8.0 / self.alpha2p).max(2.0 * c0 * c0)
    }
}

/// Every intermediate of one level selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectorTrace {
    pub xi1_candidates: Vec<f64>,
    pub xi2_candidates: Vec<f64>,
    /// N(ξ_{1,k}) for k = 1..=n
    pub exceed_counts: Vec<usize>,
    /// Number of step-up rejections k̂ (0 when ξ̂₁ = ∞).
    pub rejections: usize,
    #[serde(with = "crate::ext_real")]
    pub xi1_hat: f64,
    #[serde(with = "crate::ext_real")]
    pub xi2_hat: f64,
    #[serde(with = "crate::ext_real")]
    pub lower: f64,
    #[serde(with = "crate::ext_real")]
    pub upper: f64,
    #[serde(with = "crate::ext_real")]
    pub lambda_hat: f64,
}

/// The levels chosen for one observation vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Levels {
    pub xi1_hat: f64,
    pub xi2_hat: f64,
    pub rejections: usize,
    pub lower: f64,
    pub upper: f64,
    pub lambda_hat: f64,
}

/// Level selector for a fixed dimension with the candidate levels
/// precomputed, for repeated use across Monte Carlo replicates.
#[derive(Debug, Clone)]
pub struct Selector {
    config: FdrConfig,
    xi1: Vec<f64>,
    xi2: Vec<f64>,
}

impl Selector {
    pub fn new(n: usize, config: &FdrConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config: *config,
            xi1: candidate_levels(n, config.alpha1)?,
            xi2: candidate_levels(n, config.alpha2)?,
        })
    }

    pub fn n(&self) -> usize {
        self.xi1.len()
    }

    pub fn config(&self) -> &FdrConfig {
        &self.config
    }

    pub fn xi1(&self) -> &[f64] {
        &self.xi1
    }

    pub fn xi2(&self) -> &[f64] {
        &self.xi2
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.n() {
            Ok(())
        } else {
            domain(format!(
                "selector built for n = {} but got {} observations",
                self.n(),
                x.len()
            ))
        }
    }

    /// |x| sorted in decreasing order.
    pub fn sorted_magnitudes(x: &[f64]) -> Vec<f64> {
        let mut a: Vec<f64> = x.iter().map(|v| v.abs()).collect();
        a.sort_by(|p, q| q.total_cmp(p));
        a
    }

    /// Levels from |x| already sorted in decreasing order.
    pub fn levels_sorted(&self, abs_desc: &[f64]) -> Levels {
        let n = self.n();
        // N(ξ_k) ≥ k ⟺ |x|_(k) ≥ ξ_k; the minimum over qualifying ξ_{1,k}
        // is attained at the largest qualifying k.
        let rejections = (1..=n)
            .rev()
            .find(|&k| abs_desc[k - 1] >= self.xi1[k - 1])
            .unwrap_or(0);
        let xi1_hat = if rejections == 0 {
            f64::INFINITY
        } else {
            self.xi1[rejections - 1]
        };

        // ξ_{2,0} = ∞ qualifies when N(ξ_{2,1}) < 1; ξ_{2,n+1} = 0 makes k = n
        // always qualify. The maximum is attained at the smallest qualifying k.
        let xi2_hat = if abs_desc[0] < self.xi2[0] {
            f64::INFINITY
        } else {
            let k = (1..n).find(|&k| abs_desc[k] < self.xi2[k]).unwrap_or(n);
            self.xi2[k - 1]
        };

        let lower = (1.0 + self.config.delta1).sqrt() * self.config.g1.apply(xi1_hat);
        let upper = (1.0 + self.config.delta2).sqrt() * xi2_hat;
        let lambda_hat = if self.config.interp == 0.0 || lower == upper {
            lower
        } else {
            lower + self.config.interp * (upper - lower)
        };
        Levels {
            xi1_hat,
            xi2_hat,
            rejections,
            lower,
            upper,
            lambda_hat,
        }
    }

    pub fn levels(&self, x: &[f64]) -> Result<Levels> {
        self.check_len(x)?;
        Ok(self.levels_sorted(&Self::sorted_magnitudes(x)))
    }

    pub fn trace(&self, x: &[f64]) -> Result<SelectorTrace> {
        self.check_len(x)?;
        let sorted = Self::sorted_magnitudes(x);
        let levels = self.levels_sorted(&sorted);
        // sorted is decreasing and ξ_{1,k} decreasing in k, so one pass suffices
        let mut exceed_counts = Vec::with_capacity(self.n());
        let mut count = 0;
        for &t in &self.xi1 {
            while count < sorted.len() && sorted[count] >= t {
                count += 1;
            }
            exceed_counts.push(count);
        }
        Ok(SelectorTrace {
            xi1_candidates: self.xi1.clone(),
            xi2_candidates: self.xi2.clone(),
            exceed_counts,
            rejections: levels.rejections,
            xi1_hat: levels.xi1_hat,
            xi2_hat: levels.xi2_hat,
            lower: levels.lower,
            upper: levels.upper,
            lambda_hat: levels.lambda_hat,
        })
    }
}

fn nonempty(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        domain("empty observation vector")
    } else {
        Ok(())
    }
}

/// ξ̂₁ = min{ξ_{1,k} : N(ξ_{1,k}) ≥ k}, or +∞ when no k qualifies.
pub fn step_up_level(x: &[f64], config: &FdrConfig) -> Result<f64> {
    nonempty(x)?;
    Ok(Selector::new(x.len(), config)?.levels(x)?.xi1_hat)
}

/// ξ̂₂ = max{ξ_{2,k} : N(ξ_{2,k+1}) < k + 1} over k = 0..=n with
/// ξ_{2,0} = ∞ and ξ_{2,n+1} = 0.
pub fn step_down_level(x: &[f64], config: &FdrConfig) -> Result<f64> {
    nonempty(x)?;
    Ok(Selector::new(x.len(), config)?.levels(x)?.xi2_hat)
}

/// λ̂ = L + interp·(U - L) with L = √(1+δ₁)·g₁(ξ̂₁) and U = √(1+δ₂)·ξ̂₂.
pub fn select_lambda(x: &[f64], config: &FdrConfig) -> Result<SelectorTrace> {
    nonempty(x)?;
    Selector::new(x.len(), config)?.trace(x)
}
