//! Seeded random streams and the exponential variate.

use rand_core::{Rng, SeedableRng};
use rand_pcg::Pcg64Mcg;

/// 64-bit finalizer from SplitMix64 (Steele, Lea & Flood):
///
/// ```text
/// z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
/// z = (z ^ (z >> 27)) * 0x94D049BB133111EB
/// z =  z ^ (z >> 31)
/// ```
///
/// A bijection on `u64` with `mix64(0) == 0`.
pub const fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `k` in an ensemble rooted at `seed`: `seed ^ mix64(k)`.
/// Realization 0 uses `seed` itself.
pub const fn realization_seed(seed: u64, k: u64) -> u64 {
    seed ^ mix64(k)
}

/// Deterministic uniform stream. Same seed, same sequence, on every platform.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    inner: Pcg64Mcg,
}

const INV_2_53: f64 = 1.0 / (1u64 << 53) as f64;

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream { seed, inner: Pcg64Mcg::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on (0, 1]; never zero, so `ln` is finite.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * INV_2_53
    }

    /// Uniform on [0, 1).
    #[inline]
    pub fn uniform_half_open(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * INV_2_53
    }

    /// Uniform integer in [0, n). `n` must be positive.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Lemire's multiply-shift; bias is below 2^-64 * n.
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Exponential waiting time with the given rate, or +∞ when the rate is
    /// not positive.
    #[inline]
    pub fn exponential(&mut self, rate: f64) -> f64 {
        if rate > 0.0 {
            sample_exponential(rate, self.uniform())
        } else {
            f64::INFINITY
        }
    }
}

/// Inverse-CDF exponential: `-ln(u) / rate` with `u ∈ (0, 1]`.
/// Returns +∞ for a non-positive rate.
#[inline]
pub fn sample_exponential(rate: f64, u: f64) -> f64 {
    if rate > 0.0 {
        -u.ln() / rate
    } else {
        f64::INFINITY
    }
}
