//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use fdrthresh::{exceed_count, normal_cdf, normal_pdf};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn integrate(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0
            || delta.abs() <= 15.0 * tol
            || delta.abs() <= 64.0 * f64::EPSILON * (left.abs() + right.abs())
        {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fb) = (f(a), f(b));
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Integral over consecutive breakpoints, each piece integrated separately.
pub fn integrate_pieces(f: &impl Fn(f64) -> f64, breaks: &[f64], tol: f64) -> f64 {
    let mut b = breaks.to_vec();
    b.sort_by(f64::total_cmp);
    b.windows(2).map(|w| integrate(f, w[0], w[1], tol)).sum()
}

/// ∫ (s_λ(μ + z) - μ)² φ(z) dz by quadrature of the defining integral.
pub fn soft_risk_quadrature(mu: f64, lambda: f64) -> f64 {
    let f = |z: f64| {
        let x = mu + z;
        let s = if x.abs() > lambda {
            x - lambda * x.signum()
        } else {
            0.0
        };
        (s - mu) * (s - mu) * normal_pdf(z)
    };
    let reach = (mu.abs() + lambda + 14.0).ceil();
    let mut breaks = vec![-lambda - mu, lambda - mu];
    breaks.extend((0..=(2.0 * reach) as i64).map(|i| i as f64 - reach));
    integrate_pieces(&f, &breaks, 1e-15)
}

/// Φ⁻¹ by bisection on Φ.
pub fn quantile_bisect(p: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn candidates_bisect(n: usize, alpha: f64) -> Vec<f64> {
    (1..=n)
        .map(|k| -quantile_bisect(alpha * k as f64 / (2.0 * n as f64)))
        .collect()
}

/// min{ξ_{1,k} : N(ξ_{1,k}) ≥ k} by direct evaluation of the set.
pub fn brute_step_up(x: &[f64], xi1: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, &t) in xi1.iter().enumerate() {
        if exceed_count(x, t) > i && t < best {
            best = t;
        }
    }
    best
}

/// max{ξ_{2,k} : N(ξ_{2,k+1}) < k + 1} over k = 0..=n with ξ_{2,0} = ∞ and
/// ξ_{2,n+1} = 0, by direct evaluation of the set.
pub fn brute_step_down(x: &[f64], xi2: &[f64]) -> f64 {
    let n = x.len();
    let level = |k: usize| -> f64 {
        if k == 0 {
            f64::INFINITY
        } else if k == n + 1 {
            0.0
        } else {
            xi2[k - 1]
        }
    };
    let mut best = f64::NEG_INFINITY;
    for k in 0..=n {
        if exceed_count(x, level(k + 1)) < k + 1 && level(k) > best {
            best = level(k);
        }
    }
    best
}

/// ‖s_λ(x) - θ‖² evaluated coordinatewise.
pub fn soft_loss(x: &[f64], theta: &[f64], lambda: f64) -> f64 {
    x.iter()
        .zip(theta)
        .map(|(&xi, &ti)| {
            let s = if xi.abs() > lambda {
                xi - lambda * xi.signum()
            } else {
                0.0
            };
            (s - ti) * (s - ti)
        })
        .sum()
}

/// Minimum of ‖s_λ(x) - θ‖² over an evenly spaced grid on [0, max|x|]
/// together with the knots |x_i|.
pub fn grid_loss_min(x: &[f64], theta: &[f64], points: usize) -> f64 {
    let top = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut best = soft_loss(x, theta, top);
    for i in 0..points {
        let l = top * i as f64 / (points - 1) as f64;
        best = best.min(soft_loss(x, theta, l));
    }
    for v in x {
        best = best.min(soft_loss(x, theta, v.abs()));
    }
    best
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rand_distr::Distribution::sample(&rand_distr::StandardNormal, rng)
}

/// Sparse-ish random mean vector: each coordinate zero with probability
/// `zero_prob`, otherwise uniform on (-scale, scale).
pub fn random_theta(rng: &mut ChaCha8Rng, n: usize, zero_prob: f64, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if rng.random::<f64>() < zero_prob {
                0.0
            } else {
                rng.random_range(-scale..scale)
            }
        })
        .collect()
}
