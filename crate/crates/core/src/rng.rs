//! Seeded random streams.
//!
//! The uniform source is xoshiro256** seeded through SplitMix64, both fixed,
//! published algorithms, so fixtures can be regenerated bit-for-bit from any
//! language. Derived variates consume the stream in a documented order:
//!
//! * uniform: `((u64 >> 11) + 0.5) · 2⁻⁵³`, always strictly inside (0, 1)
//! * normal: one uniform through the AS241 inverse CDF
//! * gamma(shape ≥ 1): Marsaglia–Tsang, each attempt draws one normal then one uniform
//! * Student-t(ν): one normal `Z`, then `V ~ χ²_ν = 2·gamma(ν/2)`, returns `Z / √(V/ν)`

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::stats::normal_quantile;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for the stream identified by `path`.
pub fn substream_seed(seed: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(seed), |acc, &p| {
        splitmix64(acc ^ splitmix64(p.wrapping_add(1)))
    })
}

#[derive(Debug, Clone)]
pub struct Stream {
    inner: Xoshiro256StarStar,
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    /// Stream for a `(seed, index, ...)` tuple; order of evaluation never matters.
    pub fn substream(seed: u64, path: &[u64]) -> Self {
        Self::new(substream_seed(seed, path))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..bound` by 128-bit multiply-shift.
    pub fn below(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        ((self.next_u64() as u128 * bound as u128) >> 64) as usize
    }

    pub fn normal(&mut self) -> f64 {
        normal_quantile(self.uniform())
    }

    pub fn gamma(&mut self, shape: f64) -> f64 {
        debug_assert!(shape >= 1.0);
        let d = shape - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let z = self.normal();
            let u = self.uniform();
            let v = 1.0 + c * z;
            if v <= 0.0 {
                continue;
            }
            let v = v * v * v;
            if u.ln() < 0.5 * z * z + d - d * v + d * v.ln() {
                return d * v;
            }
        }
    }

    pub fn student_t(&mut self, dof: f64) -> f64 {
        let z = self.normal();
        let chi2 = 2.0 * self.gamma(dof / 2.0);
        z / (chi2 / dof).sqrt()
    }

    /// `k` distinct indices from `0..n` by partial Fisher–Yates.
    pub fn subset(&mut self, n: usize, k: usize) -> Vec<usize> {
        debug_assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}
