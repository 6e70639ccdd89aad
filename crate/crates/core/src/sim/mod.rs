//! Seeded Monte Carlo harness.
//!
//! Replicate `r` of a run with root seed `s` draws its noise from ChaCha8
//! seeded with `s` on stream `r`, so every replicate is reproducible on its
//! own and results do not depend on thread scheduling. Replicates run in
//! parallel; the reduction is a sequential sum in replicate order.

mod experiments;

pub use experiments::*;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{domain, Error, Result};
use crate::estimator::universal_level;
use crate::fdr::{FdrConfig, Selector};
use crate::threshold::{order_by_magnitude, ThresholdFamily};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Random source for one replicate.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

pub fn fill_standard_normal(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    for v in out {
        *v = StandardNormal.sample(rng);
    }
}

/// Runs `f` once per replicate in parallel and returns the results in
/// replicate order.
pub fn run_replicates<T, F>(replicates: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r);
            f(r, &mut rng)
        })
        .collect()
}

/// SHA-256 of the JSON form of a run description, hex encoded.
pub fn fingerprint<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("run descriptions serialize");
    let mut hasher = Sha256::new();
    hasher.update(VERSION.as_bytes());
    hasher.update(&json);
    hex::encode(hasher.finalize())
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicates: usize,
    pub seed: u64,
    pub config_fingerprint: String,
}

impl McEstimate {
    /// Sample mean and sd/√R of at least two samples.
    pub fn from_samples(samples: &[f64], seed: u64, config_fingerprint: String) -> Result<Self> {
        let r = samples.len();
        if r < 2 {
            return domain(format!("need at least 2 replicates, got {r}"));
        }
        let (mean, var) = mean_var(samples);
        Ok(Self {
            mean,
            std_error: (var / r as f64).sqrt(),
            replicates: r,
            seed,
            config_fingerprint,
        })
    }

    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.std_error
    }
}

/// Sample mean and unbiased sample variance, summed in order.
pub fn mean_var(samples: &[f64]) -> (f64, f64) {
    let r = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / r;
    let ss = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>();
    (
        mean,
        if samples.len() > 1 {
            ss / (r - 1.0)
        } else {
            0.0
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaKind {
    Zero,
    CommonMean {
        mu: f64,
    },
    /// `count` leading coordinates equal to `magnitude`, the rest zero.
    Spikes {
        count: usize,
        magnitude: f64,
    },
    /// Near least favorable point of the strong or weak ℓ_p ball of
    /// radius `c`.
    LeastFavorable {
        p: f64,
        c: f64,
        weak: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaGenerator {
    pub n: usize,
    #[serde(flatten)]
    pub kind: ThetaKind,
}

impl ThetaGenerator {
    pub fn new(n: usize, kind: ThetaKind) -> Self {
        Self { n, kind }
    }

    pub fn generate(&self) -> Result<Vec<f64>> {
        let n = self.n;
        if n == 0 {
            return domain("n must be >= 1");
        }
        match self.kind {
            ThetaKind::Zero => Ok(vec![0.0; n]),
            ThetaKind::CommonMean { mu } => {
                if !mu.is_finite() {
                    return domain(format!("common mean must be finite, got {mu}"));
                }
                Ok(vec![mu; n])
            }
            ThetaKind::Spikes { count, magnitude } => {
                if count > n {
                    return domain(format!("spike count {count} exceeds n = {n}"));
                }
                if !magnitude.is_finite() {
                    return domain(format!("spike magnitude must be finite, got {magnitude}"));
                }
                let mut theta = vec![0.0; n];
                theta[..count].fill(magnitude);
                Ok(theta)
            }
            ThetaKind::LeastFavorable { p, c, weak } => least_favorable(n, p, c, weak),
        }
    }
}

fn check_ball(p: f64, c: f64) -> Result<()> {
    if !(0.0..2.0).contains(&p) {
        return domain(format!("p must lie in [0, 2), got {p}"));
    }
    if !(c >= 0.0 && c.is_finite()) {
        return domain(format!("radius must be finite and >= 0, got {c}"));
    }
    if p == 0.0 && c > 1.0 {
        return domain(format!("an l0 radius is a fraction in [0, 1], got {c}"));
    }
    Ok(())
}

/// p′ = p for p > 0 and 1 for p = 0.
fn p_prime(p: f64) -> f64 {
    if p > 0.0 {
        p
    } else {
        1.0
    }
}

/// λ_{p,C,n} = √(2 log min(n, C^{-p′})).
pub fn ball_level(p: f64, c: f64, n: usize) -> Result<f64> {
    check_ball(p, c)?;
    let inv = c.powf(-p_prime(p));
    Ok((2.0 * (n as f64).min(inv).max(1.0).ln()).sqrt())
}

/// M_p · n · C^{p′} · λ_{p,C,n}^{2-p} with M_p = 1 for strong balls and
/// 2/(2 - p) for weak balls.
pub fn minimax_formula(p: f64, c: f64, n: usize, weak: bool) -> Result<f64> {
    let lambda = ball_level(p, c, n)?;
    let m = if weak { 2.0 / (2.0 - p) } else { 1.0 };
    Ok(m * n as f64 * c.powf(p_prime(p)) * lambda.powf(2.0 - p))
}

// Coordinates stacked at the largest values the ball allows below λ_{p,C,n}.
fn least_favorable(n: usize, p: f64, c: f64, weak: bool) -> Result<Vec<f64>> {
    let lambda = ball_level(p, c, n)?;
    let mut theta = vec![0.0; n];
    if c == 0.0 {
        return Ok(theta);
    }
    if p == 0.0 {
        let k = ((n as f64 * c) + 1e-9).floor() as usize;
        theta[..k.min(n)].fill(lambda);
    } else if weak {
        for (i, t) in theta.iter_mut().enumerate() {
            let k = (i + 1) as f64;
            *t = (c * (n as f64 / k).powf(1.0 / p)).min(lambda);
        }
    } else {
        let budget = n as f64 * c.powf(p);
        let full = (budget / lambda.powf(p)).floor() as usize;
        if full >= n {
            theta.fill(lambda);
        } else {
            theta[..full].fill(lambda);
            let rest = budget - full as f64 * lambda.powf(p);
            theta[full] = rest.max(0.0).powf(1.0 / p);
        }
    }
    Ok(theta)
}

/// Membership of θ in the strong (or weak) ℓ_p ball of radius C, with
/// relative slack 1e-12.
pub fn in_ball(theta: &[f64], p: f64, c: f64, weak: bool) -> Result<bool> {
    check_ball(p, c)?;
    let n = theta.len() as f64;
    let slack = 1.0 + 1e-12;
    if p == 0.0 {
        let nonzero = theta.iter().filter(|v| **v != 0.0).count() as f64;
        return Ok(nonzero / n <= c * slack);
    }
    if weak {
        let mut a: Vec<f64> = theta.iter().map(|v| v.abs()).collect();
        a.sort_by(|x, y| y.total_cmp(x));
        Ok(a.iter()
            .enumerate()
            .all(|(i, v)| v * ((i + 1) as f64 / n).powf(1.0 / p) <= c * slack))
    } else {
        Ok(theta.iter().map(|v| v.abs().powf(p)).sum::<f64>() / n <= c.powf(p) * slack)
    }
}

/// An estimator to evaluate by simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EstimatorSpec {
    /// t_λ̂(X) with the FDR level.
    Fdr {
        family: ThresholdFamily,
        config: FdrConfig,
    },
    /// t_λ(X) at a fixed level.
    Fixed {
        family: ThresholdFamily,
        #[serde(with = "crate::ext_real")]
        lambda: f64,
    },
    /// t_λ(X) at λ = √(2 log n).
    Universal {
        family: ThresholdFamily,
    },
    SampleMean,
}

/// An [`EstimatorSpec`] bound to a dimension, with per-run work done once.
#[derive(Debug, Clone)]
pub struct PreparedEstimator {
    family: Option<ThresholdFamily>,
    level: Level,
}

#[derive(Debug, Clone)]
enum Level {
    Adaptive(Box<Selector>),
    Fixed(f64),
    Mean,
}

impl EstimatorSpec {
    pub fn prepare(&self, n: usize) -> Result<PreparedEstimator> {
        if n == 0 {
            return domain("n must be >= 1");
        }
        let (family, level) = match *self {
            Self::Fdr { family, config } => (
                Some(family),
                Level::Adaptive(Box::new(Selector::new(n, &config)?)),
            ),
            Self::Fixed { family, lambda } => {
                if !(lambda >= 0.0) {
                    return domain(format!("threshold level must be >= 0, got {lambda}"));
                }
                (Some(family), Level::Fixed(lambda))
            }
            Self::Universal { family } => (Some(family), Level::Fixed(universal_level(n))),
            Self::SampleMean => (None, Level::Mean),
        };
        if let Some(f) = family {
            f.validate()?;
        }
        Ok(PreparedEstimator { family, level })
    }
}

impl PreparedEstimator {
    /// Writes the estimate for `x` into `out` and returns the level used
    /// (NaN for the sample mean).
    pub fn estimate_into(&self, x: &[f64], out: &mut [f64]) -> f64 {
        let lambda = match &self.level {
            Level::Adaptive(sel) => {
                sel.levels_sorted(&Selector::sorted_magnitudes(x))
                    .lambda_hat
            }
            Level::Fixed(l) => *l,
            Level::Mean => {
                let mean = x.iter().sum::<f64>() / x.len() as f64;
                out.fill(mean);
                return f64::NAN;
            }
        };
        self.family
            .expect("threshold estimators carry a family")
            .apply_into(x, lambda, out);
        lambda
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// Total squared error risk E‖θ̂ - θ‖² by simulation.
pub fn mc_risk(
    theta: &[f64],
    spec: &EstimatorSpec,
    replicates: usize,
    seed: u64,
) -> Result<McEstimate> {
    let est = spec.prepare(theta.len())?;
    let fp = fingerprint(&(theta, spec, replicates, seed, "mc_risk"));
    mc_functional(theta, replicates, seed, false, fp, |x| {
        let mut out = vec![0.0; x.len()];
        est.estimate_into(x, &mut out);
        squared_distance(&out, theta)
    })
}

/// Monte Carlo mean of `f(X)`, X ~ N(θ, I).
///
/// With `antithetic`, each replicate evaluates `f` at θ + ε and θ - ε and
/// records the average, so linear functionals have zero variance.
pub fn mc_functional<F>(
    theta: &[f64],
    replicates: usize,
    seed: u64,
    antithetic: bool,
    config_fingerprint: String,
    f: F,
) -> Result<McEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if theta.is_empty() {
        return domain("empty mean vector");
    }
    if replicates < 2 {
        return domain(format!("need at least 2 replicates, got {replicates}"));
    }
    let n = theta.len();
    let samples = run_replicates(replicates, seed, |_, rng| {
        let mut eps = vec![0.0; n];
        fill_standard_normal(rng, &mut eps);
        let x: Vec<f64> = theta.iter().zip(&eps).map(|(t, e)| t + e).collect();
        if antithetic {
            let y: Vec<f64> = theta.iter().zip(&eps).map(|(t, e)| t - e).collect();
            0.5 * (f(&x) + f(&y))
        } else {
            f(&x)
        }
    });
    McEstimate::from_samples(&samples, seed, config_fingerprint)
}

/// inf over λ ∈ [0, ∞] of ‖s_λ(x) - θ‖², with a minimizing level.
///
/// Between consecutive order statistics of |x| the loss is the quadratic
/// Σ_{|x_i| > λ} (|x_i| - sgn(x_i)θ_i - λ)² + Σ_{|x_i| ≤ λ} θ_i², so each
/// segment is minimized in closed form. λ = ∞ stands for every level at or
/// above max|x_i|.
pub fn oracle_loss_min(x: &[f64], theta: &[f64]) -> Result<(f64, f64)> {
    if x.len() != theta.len() {
        return domain(format!(
            "x has length {} but theta has length {}",
            x.len(),
            theta.len()
        ));
    }
    if x.iter().chain(theta).any(|v| !v.is_finite()) {
        return domain("inputs must be finite");
    }
    let order = order_by_magnitude(x);
    let n = x.len();
    let mut tail: f64 = theta.iter().map(|t| t * t).sum();
    let mut best = (f64::INFINITY, tail);
    let (mut s1, mut s2) = (0.0, 0.0);
    for k in 1..=n {
        let i = order[k - 1];
        let c = x[i].abs() - x[i].signum() * theta[i];
        s1 += c;
        s2 += c * c;
        tail -= theta[i] * theta[i];
        let hi = x[i].abs();
        let lo = if k < n { x[order[k]].abs() } else { 0.0 };
        let kk = k as f64;
        let lambda = (s1 / kk).clamp(lo, hi);
        let loss = s2 - 2.0 * lambda * s1 + kk * lambda * lambda + tail.max(0.0);
        if loss < best.1 {
            best = (lambda, loss);
        }
    }
    let loss = if best.0.is_infinite() {
        theta.iter().map(|t| t * t).sum()
    } else {
        soft_loss(x, theta, best.0)
    };
    Ok((best.0, loss))
}

/// ‖s_λ(x) - θ‖².
pub fn soft_loss(x: &[f64], theta: &[f64], lambda: f64) -> f64 {
    x.iter()
        .zip(theta)
        .map(|(&xi, &ti)| {
            let m = xi.abs() - lambda;
            let s = if m > 0.0 { m.copysign(xi) } else { 0.0 };
            (s - ti) * (s - ti)
        })
        .sum()
}

pub(crate) fn require_replicates(replicates: usize) -> Result<()> {
    if replicates < 2 {
        Err(Error::InvalidConfig(format!(
            "need at least 2 replicates, got {replicates}"
        )))
    } else {
        Ok(())
    }
}
