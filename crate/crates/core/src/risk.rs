//! Exact Gaussian risk of soft thresholding under a discrete prior, the
//! surrogate risk r_G, the rejection probability S_G, the nominal FDR curve,
//! and the optimal fixed levels these functionals define.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fdr::FdrConfig;
use crate::gauss::{
    interval_moments, log_normal_cdf, normal_cdf, normal_pdf, normal_sf, tilted_exp_moment,
};

/// Discrete prior G = Σ w_i δ_{θ_i}. For the nominal empirical prior of a
/// mean vector every coordinate carries weight 1/n; equal coordinates are
/// merged into one weighted atom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriorRecord", into = "PriorRecord")]
pub struct EmpiricalPrior {
    atoms: Vec<f64>,
    weights: Vec<f64>,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct PriorRecord {
    atoms: Vec<f64>,
    weights: Vec<f64>,
    n: usize,
}

impl TryFrom<PriorRecord> for EmpiricalPrior {
    type Error = Error;

    fn try_from(r: PriorRecord) -> Result<Self> {
        let mut prior = EmpiricalPrior::new(r.atoms, r.weights)?;
        if r.n == 0 {
            return Err(Error::InvalidPrior("n must be positive".into()));
        }
        prior.n = r.n;
        Ok(prior)
    }
}

impl From<EmpiricalPrior> for PriorRecord {
    fn from(p: EmpiricalPrior) -> Self {
        PriorRecord {
            atoms: p.atoms,
            weights: p.weights,
            n: p.n,
        }
    }
}

impl EmpiricalPrior {
    /// Weighted atoms; weights must be nonnegative and sum to one within 1e-12.
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidPrior("no atoms".into()));
        }
        if atoms.len() != weights.len() {
            return Err(Error::InvalidPrior(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if let Some(a) = atoms.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidPrior(format!("atom {a} is not finite")));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::InvalidPrior(format!("weight {w} is negative")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPrior(format!(
                "weights sum to {total}, not 1"
            )));
        }
        let n = atoms.len();
        Ok(Self { atoms, weights, n })
    }

    /// The nominal prior G_n = n⁻¹ Σ δ_{θ_i} of a mean vector.
    pub fn uniform(theta: &[f64]) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::InvalidPrior("empty mean vector".into()));
        }
        if let Some(a) = theta.iter().find(|a| !a.is_finite()) {
            return Err(Error::InvalidPrior(format!("atom {a} is not finite")));
        }
        let mut sorted = theta.to_vec();
        sorted.sort_by(f64::total_cmp);
        let w = 1.0 / theta.len() as f64;
        let mut atoms: Vec<f64> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for v in sorted {
            match atoms.last() {
                Some(&last) if last == v => *counts.last_mut().unwrap() += 1,
                _ => {
                    atoms.push(v);
                    counts.push(1);
                }
            }
        }
        let weights = counts.iter().map(|&c| c as f64 * w).collect();
        Ok(Self {
            atoms,
            weights,
            n: theta.len(),
        })
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        Self::new(vec![value], vec![1.0])
    }

    /// Number of coordinates the prior summarizes.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.atoms
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
            .filter(|&(_, w)| w > 0.0)
    }

    /// True when all mass sits at zero, in which case the FDR curve is
    /// identically one.
    pub fn is_degenerate(&self) -> bool {
        self.iter().all(|(a, _)| a == 0.0)
    }

    /// ∫ u² G(du).
    pub fn second_moment(&self) -> f64 {
        self.iter().map(|(a, w)| w * a * a).sum()
    }

    /// Ḡ(t) = G{|u| > t}.
    pub fn tail_mass(&self, t: f64) -> f64 {
        self.iter()
            .filter(|&(a, _)| a.abs() > t)
            .map(|(_, w)| w)
            .sum()
    }
}

fn check_level(lambda: f64) -> Result<()> {
    if lambda >= 0.0 {
        Ok(())
    } else {
        domain(format!("threshold level must be >= 0, got {lambda}"))
    }
}

fn check_b0(b0: f64) -> Result<()> {
    if b0 >= 4.0 && b0.is_finite() {
        Ok(())
    } else {
        domain(format!("B0 must be a finite number >= 4, got {b0}"))
    }
}

// E[(Z - λ)² 1{Z > a}]
fn shifted_square_tail(a: f64, lambda: f64) -> f64 {
    if a == lambda && lambda > 4.0 {
        // (1 + λ²)Φ(-λ) - λφ(λ) cancels badly here
        return zero_mean_half_risk(lambda);
    }
    if a == f64::NEG_INFINITY {
        return 1.0 + lambda * lambda;
    }
    let m0 = normal_sf(a);
    let m1 = normal_pdf(a);
    let m2 = m0 + a * m1;
    (m2 - 2.0 * lambda * m1 + lambda * lambda * m0).max(0.0)
}

// E[(Z - λ)² 1{Z > λ}] = φ(λ) J₂(λ) / λ³ for λ > 0
fn zero_mean_half_risk(lambda: f64) -> f64 {
    let j2 = tilted_exp_moment(lambda, 2).expect("positive level");
    normal_pdf(lambda) * j2 / lambda.powi(3)
}

/// R(μ, λ) = E(s_λ(μ + Z) - μ)², Z ~ N(0, 1), in closed form.
///
/// Splits into μ² P(|μ + Z| ≤ λ) plus the two tails E[(Z ∓ λ)²; ±(μ + Z) > λ].
/// λ = ∞ gives μ².
pub fn risk_soft_point(mu: f64, lambda: f64) -> Result<f64> {
    check_level(lambda)?;
    if !mu.is_finite() {
        return domain(format!("mean must be finite, got {mu}"));
    }
    Ok(risk_soft_unchecked(mu, lambda))
}

pub(crate) fn risk_soft_unchecked(mu: f64, lambda: f64) -> f64 {
    let mu = mu.abs();
    if lambda == f64::INFINITY {
        return mu * mu;
    }
    if lambda == 0.0 {
        return 1.0;
    }
    if mu == 0.0 {
        return 2.0 * shifted_square_tail(lambda, lambda);
    }
    let inside = interval_moments(-lambda - mu, lambda - mu)[0];
    let upper = shifted_square_tail(lambda - mu, lambda);
    let lower = shifted_square_tail(lambda + mu, lambda);
    mu * mu * inside + upper + lower
}

/// R_G(λ) = ∫ R(u, λ) G(du), the per-coordinate risk of s_λ.
pub fn bayes_risk_soft(prior: &EmpiricalPrior, lambda: f64) -> Result<f64> {
    check_level(lambda)?;
    Ok(bayes_risk_unchecked(prior, lambda))
}

fn bayes_risk_unchecked(prior: &EmpiricalPrior, lambda: f64) -> f64 {
    prior
        .iter()
        .map(|(a, w)| w * risk_soft_unchecked(a, lambda))
        .sum()
}

/// ρ_G(λ) = ∫ (u² ∧ λ²) G(du). λ = ∞ is allowed.
pub fn rho_g(prior: &EmpiricalPrior, lambda: f64) -> Result<f64> {
    check_level(lambda)?;
    Ok(rho_unchecked(prior, lambda))
}

fn rho_unchecked(prior: &EmpiricalPrior, lambda: f64) -> f64 {
    let l2 = lambda * lambda;
    prior.iter().map(|(a, w)| w * (a * a).min(l2)).sum()
}

/// r_G(λ) = ρ_G(λ) + B₀ Φ(-λ) with B₀ ≥ 4.
pub fn surrogate_risk(prior: &EmpiricalPrior, lambda: f64, b0: f64) -> Result<f64> {
    check_level(lambda)?;
    check_b0(b0)?;
    Ok(surrogate_unchecked(prior, lambda, b0))
}

fn surrogate_unchecked(prior: &EmpiricalPrior, lambda: f64, b0: f64) -> f64 {
    rho_unchecked(prior, lambda) + b0 * normal_sf(lambda)
}

/// S_G(t) = ∫ P{|N(u, 1)| > t} G(du).
pub fn rejection_prob(prior: &EmpiricalPrior, t: f64) -> Result<f64> {
    check_level(t)?;
    Ok(prior
        .iter()
        .map(|(a, w)| w * (normal_cdf(a - t) + normal_cdf(-t - a)))
        .sum::<f64>()
        .min(1.0))
}

fn log_rejection_prob(prior: &EmpiricalPrior, t: f64) -> f64 {
    let terms: Vec<f64> = prior
        .iter()
        .flat_map(|(a, w)| {
            let lw = w.ln();
            [lw + log_normal_cdf(a - t), lw + log_normal_cdf(-t - a)]
        })
        .collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    top + terms.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
}

/// Value of the nominal FDR curve. `degenerate` marks a prior with all mass
/// at zero, for which the curve is identically one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FdrCurveValue {
    pub value: f64,
    pub degenerate: bool,
}

/// The nominal FDR curve 2Φ(-t)/S_G(t), evaluated in log space so that it
/// stays accurate far into the tails.
pub fn fdr_curve(prior: &EmpiricalPrior, t: f64) -> Result<FdrCurveValue> {
    check_level(t)?;
    let degenerate = prior.is_degenerate();
    let value = if degenerate || t == 0.0 {
        1.0
    } else {
        fdr_curve_unchecked(prior, t)
    };
    Ok(FdrCurveValue { value, degenerate })
}

fn fdr_curve_unchecked(prior: &EmpiricalPrior, t: f64) -> f64 {
    let log_ratio = std::f64::consts::LN_2 + log_normal_cdf(-t) - log_rejection_prob(prior, t);
    log_ratio.exp().min(1.0)
}

/// ξ_{1,*} = inf{t : curve ≤ α′₁} and ξ_{2,*} = sup{t : curve ≥ α′₂}.
/// Both are +∞ for a degenerate prior.
pub fn population_fdr_levels(
    prior: &EmpiricalPrior,
    alpha1p: f64,
    alpha2p: f64,
) -> Result<(f64, f64)> {
    if !(0.0 < alpha2p && alpha2p < alpha1p && alpha1p < 1.0) {
        return domain(format!(
            "need 0 < alpha2' < alpha1' < 1, got alpha1' = {alpha1p}, alpha2' = {alpha2p}"
        ));
    }
    if prior.is_degenerate() {
        return Ok((f64::INFINITY, f64::INFINITY));
    }
    Ok((
        curve_crossing(prior, alpha1p),
        curve_crossing(prior, alpha2p),
    ))
}

// The curve is continuous and strictly decreasing from 1, so both the
// infimum of {curve ≤ α} and the supremum of {curve ≥ α} are its α-crossing.
fn curve_crossing(prior: &EmpiricalPrior, alpha: f64) -> f64 {
    let f = |t: f64| fdr_curve_unchecked(prior, t);
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f(hi) > alpha {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Minimizers and minima of R_G and r_G over λ ∈ [0, ∞].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalLevels {
    #[serde(with = "crate::ext_real")]
    pub lambda_g: f64,
    pub eta_g: f64,
    #[serde(with = "crate::ext_real")]
    pub lambda_g_star: f64,
    pub eta_g_star: f64,
    pub b0: f64,
}

pub const OPTIMIZER_GRID: usize = 2048;

/// Default search range √(2 log n) + 4 for the finite part of λ.
pub fn default_lambda_max(n: usize) -> f64 {
    (2.0 * (n.max(1) as f64).ln()).sqrt() + 4.0
}

/// Minimizes R_G and r_G on [0, λ_max] by a 2048-point grid and golden
/// section refinement, then compares with the common λ = ∞ value ∫u²G(du).
/// The infinite level is returned when it does at least as well.
pub fn optimal_levels(prior: &EmpiricalPrior, b0: f64, lambda_max: f64) -> Result<OptimalLevels> {
    check_b0(b0)?;
    let need = default_lambda_max(prior.n());
    if !(lambda_max >= need - 1e-12) || !lambda_max.is_finite() {
        return domain(format!(
            "lambda_max must be finite and at least {need}, got {lambda_max}"
        ));
    }
    let at_infinity = prior.second_moment();
    let (lambda_g, eta_g) =
        minimize_with_limit(|l| bayes_risk_unchecked(prior, l), lambda_max, at_infinity);
    let (lambda_g_star, eta_g_star) = minimize_with_limit(
        |l| surrogate_unchecked(prior, l, b0),
        lambda_max,
        at_infinity,
    );
    Ok(OptimalLevels {
        lambda_g,
        eta_g,
        lambda_g_star,
        eta_g_star,
        b0,
    })
}

fn minimize_with_limit(f: impl Fn(f64) -> f64, lambda_max: f64, at_infinity: f64) -> (f64, f64) {
    let (arg, val) = grid_golden_min(&f, lambda_max, OPTIMIZER_GRID);
    if at_infinity <= val {
        (f64::INFINITY, at_infinity)
    } else {
        (arg, val)
    }
}

pub(crate) fn grid_golden_min(f: &impl Fn(f64) -> f64, upper: f64, points: usize) -> (f64, f64) {
    let step = upper / (points - 1) as f64;
    let (mut best_i, mut best_v) = (0, f64::INFINITY);
    for i in 0..points {
        let v = f(i as f64 * step);
        if v < best_v {
            best_i = i;
            best_v = v;
        }
    }
    let mut a = best_i.saturating_sub(1) as f64 * step;
    let mut b = ((best_i + 1).min(points - 1)) as f64 * step;
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-12 * (1.0 + b.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    let (arg, val) = if fc < fd { (c, fc) } else { (d, fd) };
    let grid_arg = best_i as f64 * step;
    if best_v < val {
        (grid_arg, best_v)
    } else {
        (arg, val)
    }
}

/// Upper bound ρ_G(√(λ² + 2)) + C₀² R(0, λ) on the per-coordinate risk of a
/// smooth threshold rule with risk constant C₀ = κ₀/(2 - κ₀).
pub fn smooth_risk_bound(prior: &EmpiricalPrior, lambda: f64, c0: f64) -> Result<f64> {
    check_level(lambda)?;
    if !(c0 >= 1.0) {
        return domain(format!("C0 must be >= 1, got {c0}"));
    }
    Ok(rho_unchecked(prior, (lambda * lambda + 2.0).sqrt())
        + c0 * c0 * risk_soft_unchecked(0.0, lambda))
}

/// Rate quantities of the oracle inequality for a run of size n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagnosticConstants {
    pub l2n: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub nu1: f64,
    pub nu2: f64,
}

fn log_plus(x: f64) -> f64 {
    x.ln().max(0.0)
}

/// Evaluates L_{2,n}, τ*₁, τ*₂ = L_{2,n}/n^{1+δ₁} and the exponential-tail
/// rates ν_j = α_j/α′_j - 1 - log(α_j/α′_j) for the given g₁ exponents
/// (c₁, c₂) and minimal surrogate risk η*.
pub fn diagnostic_constants(
    n: u64,
    config: &FdrConfig,
    c1: f64,
    c2: f64,
    eta_star: f64,
) -> Result<DiagnosticConstants> {
    config.validate()?;
    if n < 2 {
        return domain(format!("n must be >= 2, got {n}"));
    }
    if !(c1 > 0.0 && c1 <= 2.0) {
        return domain(format!("c1 must lie in (0, 2], got {c1}"));
    }
    if c1 == 2.0 && c2 > 0.0 {
        return domain(format!("c2 must be <= 0 when c1 = 2, got {c2}"));
    }
    if !(eta_star >= 0.0) {
        return domain(format!("eta* must be >= 0, got {eta_star}"));
    }
    let delta1 = config.delta1;
    let ln = (n as f64).ln();
    let lln = log_plus(ln);
    let inner = delta1 * ln.powf((5.0 - c1) / 2.0) / lln.powf(c2)
        + ln.powf((3.0 - c1) / 2.0) / lln.powf(c2 - 1.0);
    let l2n = ln.powf(-1.5) * inner.powf(1.0 + delta1);
    let tau2 = l2n / (n as f64).powf(1.0 + delta1);

    let l1 = if eta_star > 0.0 {
        (1.0 / eta_star).ln().max(std::f64::consts::E)
    } else {
        f64::INFINITY
    };
    let (middle, last) = if l1.is_finite() {
        (l1.ln().powf(-c2) / l1.powf(c1 / 2.0), 1.0 / l1)
    } else {
        (0.0, 0.0)
    };
    let first = ln.max(std::f64::consts::E).ln() / ln.max(1.0);
    let tau1 = first.max(middle).max(last);

    let nu = |a: f64, ap: f64| {
        let r = a / ap;
        r - 1.0 - r.ln()
    };
    Ok(DiagnosticConstants {
        l2n,
        tau1,
        tau2,
        nu1: nu(config.alpha1, config.alpha1p),
        nu2: nu(config.alpha2, config.alpha2p),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "functional", rename_all = "snake_case")]
pub enum Functional {
    /// R_G(λ)
    BayesRisk,
    /// r_G(λ) with the given B₀
    Surrogate { b0: f64 },
    /// S_G(λ)
    RejectionProb,
    /// 2Φ(-λ)/S_G(λ)
    FdrCurve,
    /// the smooth-rule risk bound with the given C₀
    SmoothBound { c0: f64 },
}

impl Functional {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::BayesRisk => "RG",
            Self::Surrogate { .. } => "rG",
            Self::RejectionProb => "SG",
            Self::FdrCurve => "FdrCurve",
            Self::SmoothBound { .. } => "RGsmooth",
        }
    }

    pub fn eval(&self, prior: &EmpiricalPrior, lambda: f64) -> Result<f64> {
        match *self {
            Self::BayesRisk => bayes_risk_soft(prior, lambda),
            Self::Surrogate { b0 } => surrogate_risk(prior, lambda, b0),
            Self::RejectionProb => rejection_prob(prior, lambda),
            Self::FdrCurve => fdr_curve(prior, lambda).map(|v| v.value),
            Self::SmoothBound { c0 } => smooth_risk_bound(prior, lambda, c0),
        }
    }
}

/// A functional sampled on an increasing grid of levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskCurve {
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    pub functional: Functional,
}

pub fn risk_curve(
    prior: &EmpiricalPrior,
    lambdas: &[f64],
    functional: Functional,
) -> Result<RiskCurve> {
    if lambdas.is_empty() {
        return domain("empty level grid");
    }
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("level grid must be strictly increasing");
    }
    if lambdas.iter().any(|l| !l.is_finite()) {
        return domain("level grid must be finite");
    }
    let values = lambdas
        .iter()
        .map(|&l| functional.eval(prior, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(RiskCurve {
        lambdas: lambdas.to_vec(),
        values,
        functional,
    })
}

impl RiskCurve {
    /// CSV with header `lambda,value,functional`.
    pub fn to_csv(&self) -> String {
        let tag = self.functional.tag();
        let mut out = String::from("lambda,value,functional\n");
        for (l, v) in self.lambdas.iter().zip(&self.values) {
            out.push_str(&format!("{l},{v},{tag}\n"));
        }
        out
    }

    /// Grid point with the smallest value.
    pub fn argmin(&self) -> (f64, f64) {
        let i = (0..self.values.len())
            .min_by(|&a, &b| self.values[a].total_cmp(&self.values[b]))
            .unwrap();
        (self.lambdas[i], self.values[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::normal_sf;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn prior_construction() {
        let p = EmpiricalPrior::uniform(&[0.0, 3.0, 0.0, 0.0]).unwrap();
        assert_eq!(p.atoms(), &[0.0, 3.0]);
        assert_eq!(p.weights(), &[0.75, 0.25]);
        assert_eq!(p.n(), 4);
        assert!(EmpiricalPrior::new(vec![1.0], vec![0.9]).is_err());
        assert!(EmpiricalPrior::new(vec![1.0, 2.0], vec![1.2, -0.2]).is_err());
        assert!(EmpiricalPrior::new(vec![f64::NAN], vec![1.0]).is_err());
        assert!(EmpiricalPrior::uniform(&[]).is_err());
        assert!(EmpiricalPrior::point_mass(0.0).unwrap().is_degenerate());
        assert!(!p.is_degenerate());
    }

    #[test]
    fn prior_serde_round_trip() {
        let p = EmpiricalPrior::uniform(&[0.0, 1.0, 1.0]).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        let back: EmpiricalPrior = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        let bad = r#"{"atoms":[1.0],"weights":[0.5],"n":1}"#;
        assert!(serde_json::from_str::<EmpiricalPrior>(bad).is_err());
    }

    #[test]
    fn point_risk_examples() {
        for mu in [0.0, 1.3, -7.0, 40.0] {
            assert_eq!(risk_soft_point(mu, 0.0).unwrap(), 1.0);
        }
        let r = risk_soft_point(0.0, 2.0).unwrap();
        assert!(4.0 * normal_sf(2.0) / 9.0 <= r && r <= 4.0 * normal_sf(2.0) / 6.0);
        assert!(close(risk_soft_point(50.0, 2.0).unwrap(), 5.0, 1e-9));
        assert_eq!(
            risk_soft_point(1.7, 0.8).unwrap(),
            risk_soft_point(-1.7, 0.8).unwrap()
        );
        assert_eq!(risk_soft_point(3.0, f64::INFINITY).unwrap(), 9.0);
        assert!(risk_soft_point(1.0, -1.0).is_err());
    }

    #[test]
    fn zero_mean_risk_branches_agree() {
        // the closed form is still accurate at λ = 4, where the J₂ route takes over
        let closed = 2.0 * ((1.0 + 16.0) * normal_sf(4.0) - 4.0 * normal_pdf(4.0));
        let tilted = 2.0 * zero_mean_half_risk(4.0);
        assert!(((closed - tilted) / tilted).abs() < 1e-9);
    }

    #[test]
    fn rho_and_surrogate() {
        let p = EmpiricalPrior::uniform(&[1.0, 2.0]).unwrap();
        assert_eq!(rho_g(&p, 0.0).unwrap(), 0.0);
        assert_eq!(rho_g(&p, f64::INFINITY).unwrap(), 2.5);
        assert_eq!(rho_g(&p, 1.5).unwrap(), 0.5 * (1.0 + 2.25));
        assert_eq!(surrogate_risk(&p, 0.0, 8.0).unwrap(), 4.0);
        assert_eq!(surrogate_risk(&p, f64::INFINITY, 8.0).unwrap(), 2.5);
        assert!(surrogate_risk(&p, 1.0, 3.9).is_err());
        let z = EmpiricalPrior::uniform(&[0.0; 5]).unwrap();
        assert!(close(
            surrogate_risk(&z, 1.3, 6.0).unwrap(),
            6.0 * normal_sf(1.3),
            1e-16
        ));
    }

    #[test]
    fn rejection_and_fdr_curve() {
        let p = EmpiricalPrior::uniform(&[0.0, 3.0]).unwrap();
        assert_eq!(rejection_prob(&p, 0.0).unwrap(), 1.0);
        let z = EmpiricalPrior::point_mass(0.0).unwrap();
        assert!(close(
            rejection_prob(&z, 1.1).unwrap(),
            2.0 * normal_sf(1.1),
            1e-16
        ));

        let v = fdr_curve(&p, 2.0).unwrap();
        let want = 2.0 * normal_sf(2.0)
            / (0.5 * 2.0 * normal_sf(2.0) + 0.5 * (normal_cdf(1.0) + normal_cdf(-5.0)));
        assert!(close(v.value, want, 1e-14));
        assert!(!v.degenerate);
        let d = fdr_curve(&z, 3.0).unwrap();
        assert!(d.degenerate && d.value == 1.0);
        assert!(close(fdr_curve(&p, 1e-9).unwrap().value, 1.0, 1e-8));
        // far tail: plain division would underflow to 0/0
        let far = fdr_curve(&p, 45.0).unwrap().value;
        assert!(far > 0.0 && far < 1e-50);
    }

    #[test]
    fn population_levels() {
        let z = EmpiricalPrior::point_mass(0.0).unwrap();
        assert_eq!(
            population_fdr_levels(&z, 0.6, 0.3).unwrap(),
            (f64::INFINITY, f64::INFINITY)
        );
        let mut theta = vec![0.0; 99];
        theta.push(4.0);
        let p = EmpiricalPrior::uniform(&theta).unwrap();
        let (x1, x2) = population_fdr_levels(&p, 0.9, 0.3).unwrap();
        assert!(x1 <= x2);
        assert!(close(fdr_curve(&p, x1).unwrap().value, 0.9, 1e-12));
        assert!(close(fdr_curve(&p, x2).unwrap().value, 0.3, 1e-12));
        assert!(population_fdr_levels(&p, 0.3, 0.6).is_err());
    }

    #[test]
    fn optimal_levels_zero_prior() {
        let z = EmpiricalPrior::uniform(&[0.0; 16]).unwrap();
        let o = optimal_levels(&z, 8.0, default_lambda_max(16)).unwrap();
        assert!(o.lambda_g.is_infinite() && o.eta_g == 0.0);
        assert!(o.lambda_g_star.is_infinite() && o.eta_g_star == 0.0);
        assert!(optimal_levels(&z, 8.0, 1.0).is_err());
    }

    #[test]
    fn optimal_levels_dense_prior_is_finite() {
        let theta: Vec<f64> = (0..200)
            .map(|i| if i % 4 == 0 { 3.0 } else { 0.0 })
            .collect();
        let p = EmpiricalPrior::uniform(&theta).unwrap();
        let o = optimal_levels(&p, 8.0, default_lambda_max(200)).unwrap();
        assert!(o.lambda_g.is_finite() && o.lambda_g > 0.5);
        assert!(close(
            bayes_risk_soft(&p, o.lambda_g).unwrap(),
            o.eta_g,
            1e-15
        ));
        assert!(o.eta_g < p.second_moment());
    }

    #[test]
    fn smooth_bound_examples() {
        let z = EmpiricalPrior::point_mass(0.0).unwrap();
        assert!(close(
            smooth_risk_bound(&z, 1.2, 3.0).unwrap(),
            9.0 * risk_soft_point(0.0, 1.2).unwrap(),
            1e-15
        ));
        let p = EmpiricalPrior::uniform(&[0.5, 2.0]).unwrap();
        let want = rho_g(&p, 2f64.sqrt()).unwrap() + 4.0;
        assert!(close(smooth_risk_bound(&p, 0.0, 2.0).unwrap(), want, 1e-15));
        assert!(smooth_risk_bound(&p, 1.0, 0.5).is_err());
    }

    #[test]
    fn diagnostics() {
        let config = FdrConfig::with_levels(0.05, 0.05, 0.1, 0.02).unwrap();
        for n in [10u64, 1000, 1 << 20] {
            let d = diagnostic_constants(n, &config, 2.0, 0.0, 0.01).unwrap();
            let ln = (n as f64).ln();
            assert!(close(d.l2n, ln.ln() / ln, 1e-14));
        }
        let d = diagnostic_constants(100, &config, 2.0, 0.0, 0.01).unwrap();
        assert!(close(d.nu1, 0.5 - 1.0 - 0.5f64.ln(), 1e-15));
        assert!(close(d.nu1, 0.193_147_180_559_945_3, 1e-15));
        assert!(diagnostic_constants(100, &config, 2.0, 0.5, 0.01).is_err());
        assert!(diagnostic_constants(1, &config, 2.0, 0.0, 0.01).is_err());
        let inf = diagnostic_constants(100, &config, 2.0, 0.0, 0.0).unwrap();
        assert!(inf.tau1.is_finite());
    }

    #[test]
    fn l0n_matches_l2n_with_inflation() {
        let mut config = FdrConfig::with_levels(0.05, 0.05, 0.1, 0.02).unwrap();
        config.delta1 = 0.1;
        config.delta2 = 0.1;
        let n = 5000u64;
        let ln = (n as f64).ln();
        let l0 = ln.powf(-1.5) * (0.1 * ln.powf(1.5) + ln.ln() * ln.sqrt()).powf(1.1);
        let d = diagnostic_constants(n, &config, 2.0, 0.0, 0.01).unwrap();
        assert!(close(d.l2n, l0, 1e-13));
    }

    #[test]
    fn curve_and_csv() {
        let p = EmpiricalPrior::uniform(&[0.0, 0.0, 2.5]).unwrap();
        let grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
        let c = risk_curve(&p, &grid, Functional::BayesRisk).unwrap();
        assert_eq!(c.values.len(), 50);
        assert!(c.to_csv().starts_with("lambda,value,functional\n0,1,RG\n"));
        assert!(risk_curve(&p, &[1.0, 1.0], Functional::BayesRisk).is_err());
        assert!(risk_curve(&p, &[], Functional::FdrCurve).is_err());
        let s4 = risk_curve(&p, &grid, Functional::Surrogate { b0: 4.0 }).unwrap();
        let s16 = risk_curve(&p, &grid, Functional::Surrogate { b0: 16.0 }).unwrap();
        assert!(s4.values.iter().zip(&s16.values).all(|(a, b)| a <= b));
    }
}
