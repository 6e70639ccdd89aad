use serde::Serialize;

use super::{
    ball_level, fill_standard_normal, fingerprint, mean_var, minimax_formula, oracle_loss_min,
    require_replicates, run_replicates, soft_loss, squared_distance, McEstimate, ThetaGenerator,
    ThetaKind, VERSION,
};
use crate::error::{domain, Result};
use crate::fdr::{FdrConfig, Selector};
use crate::risk::{
    default_lambda_max, diagnostic_constants, optimal_levels, population_fdr_levels, EmpiricalPrior,
};
use crate::threshold::ThresholdFamily;

/// Per-coordinate risks below this are treated as zero when forming ratios.
pub const RATIO_FLOOR: f64 = 1e-12;

/// A ratio of a Monte Carlo mean to a reference, or `None` when the
/// reference is (numerically) zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ratio {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport {
    pub n: usize,
    pub family: ThresholdFamily,
    pub config: FdrConfig,
    /// E‖t_λ̂(X) - θ‖²
    pub adaptive: McEstimate,
    /// n·η_G = n·min_λ R_G(λ)
    pub optimal_total: f64,
    #[serde(with = "crate::ext_real")]
    pub lambda_g: f64,
    /// (adaptive - n·η_G)/n
    pub regret: f64,
    pub regret_se: f64,
    /// adaptive/(n·η_G); absent when η_G is zero
    pub ratio: Option<Ratio>,
    /// E inf_λ ‖s_λ(X) - θ‖²
    pub oracle: McEstimate,
    /// adaptive/oracle, from the paired replicates
    pub strong_ratio: Option<Ratio>,
    pub eta_star: f64,
    /// (adaptive/n - η*)/(τ₁η* + τ₂)
    pub envelope_ratio: f64,
    pub seed: u64,
    pub fingerprint: String,
    pub version: &'static str,
}

fn paired_ratio(num: &[f64], den: &[f64]) -> Option<Ratio> {
    let (a, _) = mean_var(num);
    let (b, _) = mean_var(den);
    if b <= RATIO_FLOOR {
        return None;
    }
    let r = a / b;
    let resid: Vec<f64> = num.iter().zip(den).map(|(x, y)| x - r * y).collect();
    let (_, v) = mean_var(&resid);
    Some(Ratio {
        value: r,
        std_error: (v / num.len() as f64).sqrt() / b,
    })
}

/// Risk of the adaptive estimator against the best fixed soft level for
/// the true θ, and against the pathwise oracle level.
pub fn regret_experiment(
    theta: &[f64],
    family: ThresholdFamily,
    config: &FdrConfig,
    replicates: usize,
    seed: u64,
) -> Result<RegretReport> {
    require_replicates(replicates)?;
    family.validate()?;
    let n = theta.len();
    let selector = Selector::new(n, config)?;
    let prior = EmpiricalPrior::uniform(theta)?;
    let c0 = if family.is_smooth() {
        family.risk_constant()
    } else {
        1.0
    };
    let b0 = config.default_b0(c0);
    let opt = optimal_levels(&prior, b0, default_lambda_max(n))?;
    let fp = fingerprint(&("regret", theta, family, config, replicates, seed));

    let pairs = run_replicates(replicates, seed, |_, rng| {
        let mut x = vec![0.0; n];
        fill_standard_normal(rng, &mut x);
        for (xi, t) in x.iter_mut().zip(theta) {
            *xi += t;
        }
        let lambda = selector
            .levels_sorted(&Selector::sorted_magnitudes(&x))
            .lambda_hat;
        let mut est = vec![0.0; n];
        family.apply_into(&x, lambda, &mut est);
        let adaptive = squared_distance(&est, theta);
        let (_, oracle) = oracle_loss_min(&x, theta).expect("lengths match");
        (adaptive, oracle)
    });
    let adaptive_s: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let oracle_s: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let adaptive = McEstimate::from_samples(&adaptive_s, seed, fp.clone())?;
    let oracle = McEstimate::from_samples(&oracle_s, seed, fp.clone())?;

    let nf = n as f64;
    let optimal_total = nf * opt.eta_g;
    let ratio = (opt.eta_g > RATIO_FLOOR).then(|| Ratio {
        value: adaptive.mean / optimal_total,
        std_error: adaptive.std_error / optimal_total,
    });
    let (_, g_c1, g_c2) = config.g1.constants();
    let envelope_ratio = if n >= 2 {
        let d = diagnostic_constants(n as u64, config, g_c1, g_c2, opt.eta_g_star)?;
        (adaptive.mean / nf - opt.eta_g_star) / (d.tau1 * opt.eta_g_star + d.tau2)
    } else {
        f64::NAN
    };
    Ok(RegretReport {
        n,
        family,
        config: *config,
        regret: (adaptive.mean - optimal_total) / nf,
        regret_se: adaptive.std_error / nf,
        ratio,
        strong_ratio: paired_ratio(&adaptive_s, &oracle_s),
        adaptive,
        optimal_total,
        lambda_g: opt.lambda_g,
        oracle,
        eta_star: opt.eta_g_star,
        envelope_ratio,
        seed,
        fingerprint: fp,
        version: VERSION,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommonMeanReport {
    pub n: usize,
    pub mu: f64,
    pub fdr_soft: McEstimate,
    pub fdr_firm: McEstimate,
    pub firm_kappa0: f64,
    pub sample_mean: McEstimate,
    /// n·η_G for θ = (μ, …, μ)
    pub optimal_total: f64,
    pub seed: u64,
    pub fingerprint: String,
    pub version: &'static str,
}

pub const COMMON_MEAN_FIRM_KAPPA0: f64 = 1.5;

/// θ_i = μ for every i: FDR soft and firm estimators against the sample
/// mean, on common random numbers.
pub fn common_mean_experiment(
    n: usize,
    mu: f64,
    config: &FdrConfig,
    replicates: usize,
    seed: u64,
) -> Result<CommonMeanReport> {
    require_replicates(replicates)?;
    if n < 2 {
        return domain(format!("n must be >= 2, got {n}"));
    }
    let theta = ThetaGenerator::new(n, ThetaKind::CommonMean { mu }).generate()?;
    let selector = Selector::new(n, config)?;
    let firm = ThresholdFamily::firm(COMMON_MEAN_FIRM_KAPPA0)?;
    let prior = EmpiricalPrior::uniform(&theta)?;
    let opt = optimal_levels(&prior, config.default_b0(1.0), default_lambda_max(n))?;
    let fp = fingerprint(&("common_mean", n, mu, config, replicates, seed));

    let rows = run_replicates(replicates, seed, |_, rng| {
        let mut x = vec![0.0; n];
        fill_standard_normal(rng, &mut x);
        for xi in x.iter_mut() {
            *xi += mu;
        }
        let lambda = selector
            .levels_sorted(&Selector::sorted_magnitudes(&x))
            .lambda_hat;
        let mut est = vec![0.0; n];
        ThresholdFamily::Soft.apply_into(&x, lambda, &mut est);
        let soft = squared_distance(&est, &theta);
        firm.apply_into(&x, lambda, &mut est);
        let firm_loss = squared_distance(&est, &theta);
        let mean = x.iter().sum::<f64>() / n as f64;
        (soft, firm_loss, n as f64 * (mean - mu) * (mean - mu))
    });
    let col = |f: fn(&(f64, f64, f64)) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    Ok(CommonMeanReport {
        n,
        mu,
        fdr_soft: McEstimate::from_samples(&col(|r| r.0), seed, fp.clone())?,
        fdr_firm: McEstimate::from_samples(&col(|r| r.1), seed, fp.clone())?,
        firm_kappa0: COMMON_MEAN_FIRM_KAPPA0,
        sample_mean: McEstimate::from_samples(&col(|r| r.2), seed, fp.clone())?,
        optimal_total: n as f64 * opt.eta_g,
        seed,
        fingerprint: fp,
        version: VERSION,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimaxReport {
    pub p: f64,
    pub c: f64,
    pub n: usize,
    pub weak: bool,
    pub ball_level: f64,
    pub nonzero: usize,
    pub sum_of_squares: f64,
    pub formula: f64,
    pub risk: McEstimate,
    /// risk/formula; absent when the formula is zero
    pub ratio: Option<Ratio>,
    pub seed: u64,
    pub fingerprint: String,
    pub version: &'static str,
}

/// FDR estimator risk at the near least favorable point of an ℓ_p ball,
/// against the minimax formula M_p n C^{p′} λ_{p,C,n}^{2-p}.
#[allow(clippy::too_many_arguments)]
pub fn minimax_ball_experiment(
    p: f64,
    c: f64,
    n: usize,
    weak: bool,
    family: ThresholdFamily,
    config: &FdrConfig,
    replicates: usize,
    seed: u64,
) -> Result<MinimaxReport> {
    require_replicates(replicates)?;
    let theta = ThetaGenerator::new(n, ThetaKind::LeastFavorable { p, c, weak }).generate()?;
    let formula = minimax_formula(p, c, n, weak)?;
    let spec = super::EstimatorSpec::Fdr {
        family,
        config: *config,
    };
    let mut risk = super::mc_risk(&theta, &spec, replicates, seed)?;
    let fp = fingerprint(&("minimax", p, c, n, weak, family, config, replicates, seed));
    risk.config_fingerprint = fp.clone();
    let ratio = (formula > 0.0).then(|| Ratio {
        value: risk.mean / formula,
        std_error: risk.std_error / formula,
    });
    Ok(MinimaxReport {
        p,
        c,
        n,
        weak,
        ball_level: ball_level(p, c, n)?,
        nonzero: theta.iter().filter(|v| **v != 0.0).count(),
        sum_of_squares: theta.iter().map(|v| v * v).sum(),
        formula,
        risk,
        ratio,
        seed,
        fingerprint: fp,
        version: VERSION,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub n: usize,
    pub lambda: f64,
    pub family: ThresholdFamily,
    /// E‖t_λ(X) - θ‖/√n
    pub mean: f64,
    /// Var(‖t_λ(X) - θ‖/√n)
    pub variance: f64,
    pub variance_se: f64,
    /// 4κ₀²/n
    pub bound: f64,
    /// variance ≤ bound + 3·variance_se
    pub pass: bool,
    pub replicates: usize,
    pub seed: u64,
    pub fingerprint: String,
    pub version: &'static str,
}

/// Variance of the normalized loss ‖t_λ(X) - θ‖/√n against 4κ₀²/n.
pub fn concentration_check(
    theta: &[f64],
    family: ThresholdFamily,
    lambda: f64,
    replicates: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    require_replicates(replicates)?;
    family.validate()?;
    if !family.is_smooth() {
        return domain("the variance bound needs a Lipschitz rule; the hard threshold has none");
    }
    if !(lambda >= 0.0) {
        return domain(format!("threshold level must be >= 0, got {lambda}"));
    }
    let n = theta.len();
    if n == 0 {
        return domain("empty mean vector");
    }
    let fp = fingerprint(&("concentration", theta, family, lambda, replicates, seed));
    let samples = run_replicates(replicates, seed, |_, rng| {
        let mut x = vec![0.0; n];
        fill_standard_normal(rng, &mut x);
        for (xi, t) in x.iter_mut().zip(theta) {
            *xi += t;
        }
        let mut est = vec![0.0; n];
        family.apply_into(&x, lambda, &mut est);
        (squared_distance(&est, theta) / n as f64).sqrt()
    });
    let (mean, variance) = mean_var(&samples);
    let r = samples.len() as f64;
    let m4 = samples.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / r;
    let variance_se = ((m4 - variance * variance).max(0.0) / r).sqrt();
    let bound = 4.0 * family.kappa0().powi(2) / n as f64;
    Ok(ConcentrationReport {
        n,
        lambda,
        family,
        mean,
        variance,
        variance_se,
        bound,
        pass: variance <= bound + 3.0 * variance_se,
        replicates,
        seed,
        fingerprint: fp,
        version: VERSION,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdrControlReport {
    pub n: usize,
    pub nulls: usize,
    /// false discovery proportion of the step-up rejections {|X_i| ≥ ξ̂₁}
    pub fdr: McEstimate,
    /// α₁·n₀/n
    pub nominal: f64,
    pub mean_rejections: f64,
}

/// Empirical FDR of the Benjamini–Hochberg rejections.
pub fn fdr_control_experiment(
    theta: &[f64],
    config: &FdrConfig,
    replicates: usize,
    seed: u64,
) -> Result<FdrControlReport> {
    require_replicates(replicates)?;
    let n = theta.len();
    let selector = Selector::new(n, config)?;
    let nulls = theta.iter().filter(|t| **t == 0.0).count();
    let fp = fingerprint(&("fdr_control", theta, config, replicates, seed));
    let rows = run_replicates(replicates, seed, |_, rng| {
        let mut x = vec![0.0; n];
        fill_standard_normal(rng, &mut x);
        for (xi, t) in x.iter_mut().zip(theta) {
            *xi += t;
        }
        let xi1 = selector
            .levels_sorted(&Selector::sorted_magnitudes(&x))
            .xi1_hat;
        let (mut rejected, mut false_rej) = (0usize, 0usize);
        for (xi, t) in x.iter().zip(theta) {
            if xi.abs() >= xi1 {
                rejected += 1;
                if *t == 0.0 {
                    false_rej += 1;
                }
            }
        }
        (false_rej as f64 / rejected.max(1) as f64, rejected as f64)
    });
    let fdp: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let rej: Vec<f64> = rows.iter().map(|r| r.1).collect();
    Ok(FdrControlReport {
        n,
        nulls,
        fdr: McEstimate::from_samples(&fdp, seed, fp)?,
        nominal: config.alpha1 * nulls as f64 / n as f64,
        mean_rejections: mean_var(&rej).0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub k: usize,
    /// P{ξ̂₁ ≤ ξ_{1,k}}
    pub step_up: f64,
    pub step_up_se: f64,
    /// ξ_{1,k} ≤ ξ_{1,*}
    pub step_up_applies: bool,
    pub step_up_bound: f64,
    /// P{ξ̂₂ ≥ ξ_{2,k}}
    pub step_down: f64,
    pub step_down_se: f64,
    /// ξ_{2,k} ≥ ξ_{2,*}
    pub step_down_applies: bool,
    pub step_down_bound: f64,
}

/// Frequencies of {ξ̂₁ ≤ ξ_{1,k}} and {ξ̂₂ ≥ ξ_{2,k}} for k = 1..=k_max
/// with the exponential bounds e^{-ν_{j,*}k}.
pub fn selector_tail_experiment(
    theta: &[f64],
    config: &FdrConfig,
    k_max: usize,
    replicates: usize,
    seed: u64,
) -> Result<Vec<TailRow>> {
    require_replicates(replicates)?;
    let n = theta.len();
    if k_max == 0 || k_max > n {
        return domain(format!("k_max must lie in 1..={n}, got {k_max}"));
    }
    let selector = Selector::new(n, config)?;
    let prior = EmpiricalPrior::uniform(theta)?;
    let (xi1_star, xi2_star) = population_fdr_levels(&prior, config.alpha1p, config.alpha2p)?;
    let nu = |a: f64, ap: f64| a / ap - 1.0 - (a / ap).ln();
    let (nu1, nu2) = (
        nu(config.alpha1, config.alpha1p),
        nu(config.alpha2, config.alpha2p),
    );

    let hits = run_replicates(replicates, seed, |_, rng| {
        let mut x = vec![0.0; n];
        fill_standard_normal(rng, &mut x);
        for (xi, t) in x.iter_mut().zip(theta) {
            *xi += t;
        }
        let lv = selector.levels_sorted(&Selector::sorted_magnitudes(&x));
        let up: Vec<bool> = (0..k_max)
            .map(|k| lv.xi1_hat <= selector.xi1()[k])
            .collect();
        let down: Vec<bool> = (0..k_max)
            .map(|k| lv.xi2_hat >= selector.xi2()[k])
            .collect();
        (up, down)
    });
    let r = replicates as f64;
    let freq = |count: usize| {
        let f = count as f64 / r;
        (f, (f * (1.0 - f) / r).sqrt())
    };
    Ok((0..k_max)
        .map(|k| {
            let (up, up_se) = freq(hits.iter().filter(|h| h.0[k]).count());
            let (down, down_se) = freq(hits.iter().filter(|h| h.1[k]).count());
            let kk = (k + 1) as f64;
            TailRow {
                k: k + 1,
                step_up: up,
                step_up_se: up_se,
                step_up_applies: selector.xi1()[k] <= xi1_star,
                step_up_bound: (-nu1 * kk).exp(),
                step_down: down,
                step_down_se: down_se,
                step_down_applies: selector.xi2()[k] >= xi2_star,
                step_down_bound: (-nu2 * kk).exp(),
            }
        })
        .collect())
}

/// Risk of the soft rule at a fixed level, by simulation, for comparing
/// with exact risk formulas.
pub fn soft_risk_at(
    theta: &[f64],
    lambda: f64,
    replicates: usize,
    seed: u64,
) -> Result<McEstimate> {
    require_replicates(replicates)?;
    let fp = fingerprint(&("soft_risk", theta, lambda, replicates, seed));
    super::mc_functional(theta, replicates, seed, false, fp, |x| {
        soft_loss(x, theta, lambda)
    })
}
