//! Standard normal primitives: density, distribution, quantile, truncated
//! moments and the tilted exponential moments used by the risk bounds.
//!
//! Everything here is a pure function of its arguments.

use std::sync::OnceLock;

use crate::error::{domain, Error, Result};

/// 1/√(2π)
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// √(π/2)
pub const SQRT_PI_OVER_2: f64 = 1.253_314_137_315_500_3;

/// Standard normal density φ(x).
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal distribution function Φ(x).
///
/// Evaluated through `erfc` so that the lower tail keeps full relative
/// precision down to the underflow limit (about x = -38).
#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Upper tail Φ(-x) = 1 - Φ(x), without cancellation for large x.
#[inline]
pub fn normal_sf(x: f64) -> f64 {
    normal_cdf(-x)
}

/// ln Φ(x), finite for every finite x.
pub fn log_normal_cdf(x: f64) -> f64 {
    if x > 0.0 {
        (-normal_sf(x)).ln_1p()
    } else if x > -35.0 {
        normal_cdf(x).ln()
    } else {
        // Mills ratio series: Φ(x) = φ(x)/|x| · (1 - 1/x² + 3/x⁴ - 15/x⁶ + 105/x⁸ - ...)
        let r = 1.0 / (x * x);
        let series =
            1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r * (1.0 - 9.0 * r))));
        -0.5 * x * x + INV_SQRT_2PI.ln() - (-x).ln() + series.ln()
    }
}

/// Standard normal quantile Φ⁻¹(p) for 0 < p < 1.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("quantile probability must lie in (0, 1), got {p}"));
    }
    if p > 0.5 {
        // 1 - p is exact for p in [0.5, 1]
        Ok(-lower_quantile(1.0 - p))
    } else {
        Ok(lower_quantile(p))
    }
}

/// Quantile with the extended-real convention Φ⁻¹(0) = -∞, Φ⁻¹(1) = +∞.
pub fn normal_quantile_ext(p: f64) -> Result<f64> {
    if p == 0.0 {
        Ok(f64::NEG_INFINITY)
    } else if p == 1.0 {
        Ok(f64::INFINITY)
    } else {
        normal_quantile(p)
    }
}

// 0 < p <= 0.5
fn lower_quantile(p: f64) -> f64 {
    let mut x = acklam_guess(p);
    for _ in 0..2 {
        let density = normal_pdf(x);
        if density == 0.0 {
            break;
        }
        x -= (normal_cdf(x) - p) / density;
    }
    x
}

fn acklam_guess(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Upper truncated moments `(E[1{Z>a}], E[Z 1{Z>a}], E[Z² 1{Z>a}])` of a
/// standard normal `Z`.
pub fn truncated_moments(a: f64) -> (f64, f64, f64) {
    if a == f64::NEG_INFINITY {
        return (1.0, 0.0, 1.0);
    }
    if a == f64::INFINITY {
        return (0.0, 0.0, 0.0);
    }
    let tail = normal_sf(a);
    let density = normal_pdf(a);
    (tail, density, tail + a * density)
}

/// Moments `E[Z^k 1{lo < Z < hi}]`, k = 0, 1, 2, computed on the side of the
/// origin where the tails are small so that no difference of near-equal
/// numbers is formed.
pub(crate) fn interval_moments(lo: f64, hi: f64) -> [f64; 3] {
    if !(lo < hi) {
        return [0.0; 3];
    }
    if lo >= 0.0 {
        let (a0, a1, a2) = truncated_moments(lo);
        let (b0, b1, b2) = truncated_moments(hi);
        [a0 - b0, a1 - b1, a2 - b2]
    } else if hi <= 0.0 {
        let m = interval_moments(-hi, -lo);
        [m[0], -m[1], m[2]]
    } else {
        let left = interval_moments(lo, 0.0);
        let right = interval_moments(0.0, hi);
        [left[0] + right[0], left[1] + right[1], left[2] + right[2]]
    }
}

const GL_ORDER: usize = 16;
const GL_PANELS: usize = 64;

fn gauss_legendre_rule() -> &'static [(f64, f64); GL_ORDER] {
    static RULE: OnceLock<[(f64, f64); GL_ORDER]> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut rule = [(0.0, 0.0); GL_ORDER];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            rule[i] = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        rule
    })
}

/// J_k(λ) = ∫₀^∞ u^k exp(-u - u²/(2λ²)) du for k = 0..=3.
///
/// Composite 16-point Gauss–Legendre on 64 panels over [0, min(40λ, 200)].
/// The discarded tail is below u^k e^{-u} at u = 200 or below e^{-800}
/// relative to the integrand scale, far under double precision.
pub fn tilted_exp_moment(lambda: f64, k: u32) -> Result<f64> {
    if !(lambda > 0.0) {
        return domain(format!("J_k requires lambda > 0, got {lambda}"));
    }
    if k > 3 {
        return domain(format!("J_k is provided for k in 0..=3, got {k}"));
    }
    let inv = 1.0 / (2.0 * lambda * lambda);
    let upper = (40.0 * lambda).min(200.0);
    let width = upper / GL_PANELS as f64;
    let rule = gauss_legendre_rule();
    let mut total = 0.0;
    for panel in 0..GL_PANELS {
        let mid = (panel as f64 + 0.5) * width;
        let mut acc = 0.0;
        for &(node, weight) in rule {
            let u = mid + 0.5 * width * node;
            acc += weight * u.powi(k as i32) * (-u - u * u * inv).exp();
        }
        total += 0.5 * width * acc;
    }
    Ok(total)
}

/// The level z > 0 solving z⁻² Φ(-z) = 1/(4n).
///
/// Sparse priors with minimal surrogate risk below z²/n have an infinite
/// optimal surrogate threshold.
pub fn critical_z(n: u64) -> Result<f64> {
    if n < 2 {
        return domain(format!("critical level needs n >= 2, got {n}"));
    }
    let target = 0.25 / n as f64;
    let f = |z: f64| normal_sf(z) / (z * z) - target;
    let mut lo = 1.0;
    let mut hi = (2.0 * (4.0 * n as f64).ln()).sqrt() + 3.0;
    if !(f(lo) > 0.0 && f(hi) < 0.0) {
        return Err(Error::NoConvergence("critical level bracketing"));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
