//! Seeded random streams.
//!
//! Every stochastic routine in this crate draws from [`SimRng`], a thin wrapper
//! over ChaCha8 (`rand_chacha` 0.9, `ChaCha8Rng::seed_from_u64`). ChaCha output is
//! specified by its algorithm and is identical on every platform, so a seed
//! fully determines every generated table. Normal deviates use the
//! Box–Muller transform; the second deviate of each pair is cached.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};

/// Name and version of the underlying stream, recorded in sidecars.
pub const RNG_ALGORITHM: &str = "chacha8/rand_chacha-0.9+box-muller";

#[derive(Debug, Clone)]
pub struct SimRng {
    inner: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl SimRng {
    pub fn new(seed: u64) -> Self {
        Self {
            inner: ChaCha8Rng::seed_from_u64(seed),
            spare_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal deviate (Box–Muller).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Uniform integer in `0..n`, unbiased by rejection. `n` must be nonzero.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let x = self.next_u64();
            if x < zone {
                return (x % n) as usize;
            }
        }
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// Stable 64-bit hash of a tag (first eight bytes of SHA-256, little endian).
pub fn stable_hash(tag: &str) -> u64 {
    let digest = Sha256::digest(tag.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Seed for one (dataset, engine) pair: `master XOR stable_hash("dataset/engine")`.
///
/// Adding or removing engines never changes the seed of any other pair.
pub fn derive_seed(master: u64, dataset: &str, engine: &str) -> u64 {
    master ^ stable_hash(&format!("{dataset}/{engine}"))
}
