//! Soft, hard, firm and interpolated threshold rules, and the local minima
//! of the ℓ₀-penalized least squares problem with decreasing penalty levels.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

fn check_level(lambda: f64) -> Result<()> {
    if lambda >= 0.0 {
        Ok(())
    } else {
        domain(format!("threshold level must be >= 0, got {lambda}"))
    }
}

fn check_firm_slope(kappa0: f64) -> Result<()> {
    if kappa0 > 1.0 && kappa0 < 2.0 {
        Ok(())
    } else {
        domain(format!(
            "firm slope kappa0 must lie in (1, 2), got {kappa0}"
        ))
    }
}

#[inline]
fn soft_unchecked(x: f64, lambda: f64) -> f64 {
    let m = x.abs() - lambda;
    if m > 0.0 {
        m.copysign(x)
    } else {
        0.0
    }
}

#[inline]
fn hard_unchecked(x: f64, lambda: f64) -> f64 {
    if x.abs() > lambda {
        x
    } else {
        0.0
    }
}

#[inline]
fn firm_unchecked(x: f64, lambda: f64, kappa0: f64) -> f64 {
    let m = x.abs() - lambda;
    if m > 0.0 {
        x.abs().min(kappa0 * m).copysign(x)
    } else {
        0.0
    }
}

/// Soft threshold sgn(x)(|x| - λ)₊.
pub fn soft(x: f64, lambda: f64) -> Result<f64> {
    check_level(lambda)?;
    Ok(soft_unchecked(x, lambda))
}

/// Hard threshold x·1{|x| > λ}. The boundary |x| = λ maps to zero.
pub fn hard(x: f64, lambda: f64) -> Result<f64> {
    check_level(lambda)?;
    Ok(hard_unchecked(x, lambda))
}

/// Firm threshold sgn(x)·min{|x|, κ₀(|x| - λ)₊} with slope 1 < κ₀ < 2.
pub fn firm(x: f64, lambda: f64, kappa0: f64) -> Result<f64> {
    check_level(lambda)?;
    check_firm_slope(kappa0)?;
    Ok(firm_unchecked(x, lambda, kappa0))
}

/// Concavity parameter of the minimax concave penalty whose penalized
/// solution is the firm rule with slope κ₀: γ = κ₀/(κ₀ - 1).
pub fn mcp_gamma(kappa0: f64) -> f64 {
    kappa0 / (kappa0 - 1.0)
}

/// Minimax concave penalty λ²∫₀^{|μ|/λ} (1 - u/γ)₊ du.
pub fn mcp_penalty(mu: f64, lambda: f64, gamma: f64) -> f64 {
    let a = mu.abs();
    if a <= gamma * lambda {
        lambda * a - a * a / (2.0 * gamma)
    } else {
        0.5 * gamma * lambda * lambda
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdKind {
    Soft,
    Hard,
    Firm,
    Interpolated,
}

/// A threshold rule t_λ(x) indexed by its level λ.
///
/// `Interpolated` is the pointwise convex combination (1 - w)·soft + w·firm(κ₀).
/// Every non-hard member lies between the soft rule and the firm rule of the
/// same slope constant, is nondecreasing in x with slope at most `kappa0()`,
/// and is `kappa1()`-Lipschitz in λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThresholdFamily {
    Soft,
    Hard,
    Firm { kappa0: f64 },
    Interpolated { weight: f64, kappa0: f64 },
}

/// One linear piece `t(x) = slope·x + intercept` of a rule on `lo < x < hi`,
/// for x ≥ 0. The negative half line follows by odd symmetry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPiece {
    pub lo: f64,
    pub hi: f64,
    pub slope: f64,
    pub intercept: f64,
}

impl ThresholdFamily {
    pub fn firm(kappa0: f64) -> Result<Self> {
        check_firm_slope(kappa0)?;
        Ok(Self::Firm { kappa0 })
    }

    pub fn interpolated(weight: f64, kappa0: f64) -> Result<Self> {
        let family = Self::Interpolated { weight, kappa0 };
        family.validate()?;
        Ok(family)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Soft | Self::Hard => Ok(()),
            Self::Firm { kappa0 } => check_firm_slope(kappa0),
            Self::Interpolated { weight, kappa0 } => {
                check_firm_slope(kappa0)?;
                if (0.0..=1.0).contains(&weight) {
                    Ok(())
                } else {
                    domain(format!(
                        "interpolation weight must lie in [0, 1], got {weight}"
                    ))
                }
            }
        }
    }

    pub fn kind(&self) -> ThresholdKind {
        match self {
            Self::Soft => ThresholdKind::Soft,
            Self::Hard => ThresholdKind::Hard,
            Self::Firm { .. } => ThresholdKind::Firm,
            Self::Interpolated { .. } => ThresholdKind::Interpolated,
        }
    }

    /// Lipschitz constant in x. Infinite for the hard rule.
    pub fn kappa0(&self) -> f64 {
        match *self {
            Self::Soft => 1.0,
            Self::Hard => f64::INFINITY,
            Self::Firm { kappa0 } => kappa0,
            Self::Interpolated { weight, kappa0 } => 1.0 + weight * (kappa0 - 1.0),
        }
    }

    /// Lipschitz constant in λ.
    pub fn kappa1(&self) -> f64 {
        match *self {
            Self::Soft => 1.0,
            Self::Hard => f64::INFINITY,
            Self::Firm { kappa0 } => kappa0,
            Self::Interpolated { kappa0, .. } => kappa0.max(1.0),
        }
    }

    /// Hard thresholding is discontinuous at ±λ and falls outside the
    /// smooth class.
    pub fn is_smooth(&self) -> bool {
        !matches!(self, Self::Hard)
    }

    /// C₀ = κ₀/(2 - κ₀), the constant of the smooth-rule risk bound.
    pub fn risk_constant(&self) -> f64 {
        let k = self.kappa0();
        k / (2.0 - k)
    }

    /// t_λ(x). `lambda` may be +∞, which maps everything to zero.
    pub fn eval(&self, x: f64, lambda: f64) -> Result<f64> {
        check_level(lambda)?;
        self.validate()?;
        Ok(self.eval_unchecked(x, lambda))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: f64, lambda: f64) -> f64 {
        match *self {
            Self::Soft => soft_unchecked(x, lambda),
            Self::Hard => hard_unchecked(x, lambda),
            Self::Firm { kappa0 } => firm_unchecked(x, lambda, kappa0),
            Self::Interpolated { weight, kappa0 } => {
                (1.0 - weight) * soft_unchecked(x, lambda)
                    + weight * firm_unchecked(x, lambda, kappa0)
            }
        }
    }

    /// Componentwise application t_λ(x₁), …, t_λ(x_n).
    pub fn apply(&self, x: &[f64], lambda: f64) -> Result<Vec<f64>> {
        check_level(lambda)?;
        self.validate()?;
        Ok(x.iter().map(|&v| self.eval_unchecked(v, lambda)).collect())
    }

    pub(crate) fn apply_into(&self, x: &[f64], lambda: f64, out: &mut [f64]) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = self.eval_unchecked(v, lambda);
        }
    }

    /// Piecewise-linear description of the rule on x ≥ 0 at finite level λ.
    pub fn pieces(&self, lambda: f64) -> Vec<LinearPiece> {
        let inf = f64::INFINITY;
        let dead = LinearPiece {
            lo: 0.0,
            hi: lambda,
            slope: 0.0,
            intercept: 0.0,
        };
        match *self {
            Self::Soft => vec![
                dead,
                LinearPiece {
                    lo: lambda,
                    hi: inf,
                    slope: 1.0,
                    intercept: -lambda,
                },
            ],
            Self::Hard => vec![
                dead,
                LinearPiece {
                    lo: lambda,
                    hi: inf,
                    slope: 1.0,
                    intercept: 0.0,
                },
            ],
            Self::Firm { kappa0 } => {
                let knee = kappa0 * lambda / (kappa0 - 1.0);
                vec![
                    dead,
                    LinearPiece {
                        lo: lambda,
                        hi: knee,
                        slope: kappa0,
                        intercept: -kappa0 * lambda,
                    },
                    LinearPiece {
                        lo: knee,
                        hi: inf,
                        slope: 1.0,
                        intercept: 0.0,
                    },
                ]
            }
            Self::Interpolated { weight, kappa0 } => {
                let knee = kappa0 * lambda / (kappa0 - 1.0);
                vec![
                    dead,
                    LinearPiece {
                        lo: lambda,
                        hi: knee,
                        slope: (1.0 - weight) + weight * kappa0,
                        intercept: -((1.0 - weight) + weight * kappa0) * lambda,
                    },
                    LinearPiece {
                        lo: knee,
                        hi: inf,
                        slope: 1.0,
                        intercept: -(1.0 - weight) * lambda,
                    },
                ]
            }
        }
    }
}

impl std::fmt::Display for ThresholdFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Soft => write!(f, "soft"),
            Self::Hard => write!(f, "hard"),
            Self::Firm { kappa0 } => write!(f, "firm(kappa0={kappa0})"),
            Self::Interpolated { weight, kappa0 } => {
                write!(f, "interpolated(weight={weight}, kappa0={kappa0})")
            }
        }
    }
}

/// A local minimum of ‖θ - x‖² + Σ_{k ≤ ‖θ‖₀} ξ_k²: a hard threshold fit
/// keeping the `support_size` largest |x_i|.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenalizedFit {
    pub estimate: Vec<f64>,
    pub support_size: usize,
    /// ξ_k̂ for k̂ ≥ 1; +∞ for the empty fit.
    #[serde(with = "crate::ext_real")]
    pub implied_level: f64,
}

/// Indices of `x` ordered by decreasing |x_i|, ties by index.
pub(crate) fn order_by_magnitude(x: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()).then(a.cmp(&b)));
    idx
}

/// Every support size k ∈ {0, …, n} with X²_(k) ≥ ξ_k² and ξ²_{k+1} ≥ X²_(k+1),
/// where |X|_(1) ≥ … ≥ |X|_(n); conditions on out-of-range indices hold
/// vacuously. The returned list is never empty.
pub fn plse_local_minima(x: &[f64], penalty_levels: &[f64]) -> Result<Vec<PenalizedFit>> {
    let n = x.len();
    if penalty_levels.len() != n {
        return domain(format!(
            "penalty levels have length {} but the data have length {n}",
            penalty_levels.len()
        ));
    }
    if let Some(bad) = penalty_levels.iter().find(|v| !(**v >= 0.0)) {
        return domain(format!("penalty levels must be nonnegative, got {bad}"));
    }
    if let Some(k) = penalty_levels.windows(2).position(|w| w[1] > w[0]) {
        return domain(format!("penalty levels increase at position {}", k + 2));
    }

    let order = order_by_magnitude(x);
    let sorted: Vec<f64> = order.iter().map(|&i| x[i].abs()).collect();
    let mut fits = Vec::new();
    for k in 0..=n {
        let keeps_top = k == 0 || sorted[k - 1] * sorted[k - 1] >= penalty_levels[k - 1].powi(2);
        let drops_next = k == n || penalty_levels[k].powi(2) >= sorted[k] * sorted[k];
        if keeps_top && drops_next {
            let mut estimate = vec![0.0; n];
            for &i in &order[..k] {
                estimate[i] = x[i];
            }
            let implied_level = if k == 0 {
                f64::INFINITY
            } else {
                penalty_levels[k - 1]
            };
            fits.push(PenalizedFit {
                estimate,
                support_size: k,
                implied_level,
            });
        }
    }
    // At least one k satisfies both conditions: take the largest k with
    // |X|_(k) ≥ ξ_k; then k + 1 fails, i.e. ξ_{k+1} > |X|_(k+1).
    debug_assert!(!fits.is_empty());
    if fits.is_empty() {
        return Err(Error::Domain("no local minimum found".into()));
    }
    Ok(fits)
}
