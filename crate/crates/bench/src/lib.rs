//! Shared inputs for the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Spiky observation vector: ⌈√n⌉ means at `magnitude`, unit Gaussian noise.
pub fn spiky_observations(n: usize, magnitude: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = (n as f64).sqrt().ceil() as usize;
    let theta: Vec<f64> = (0..n)
        .map(|i| if i < k { magnitude } else { 0.0 })
        .collect();
    let x = theta
        .iter()
        .map(|t| {
            let e: f64 = StandardNormal.sample(&mut rng);
            t + e
        })
        .collect();
    (x, theta)
}
