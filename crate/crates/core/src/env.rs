//! Stochastic environment: seeded random streams and noisy reward/cost
//! observations.
//!
//! Every stream is a ChaCha20 generator (`rand_chacha::ChaCha20Rng`) seeded
//! with `seed_from_u64`; Gaussian draws use the ziggurat `StandardNormal`
//! from `rand_distr`. Both are value-stable, so a given seed yields the same
//! draws on every platform.
//!
//! Run seeds are derived as
//! `splitmix(splitmix(splitmix(master) ^ fnv1a(algorithm_id)) ^ repetition)`,
//! which depends only on its three inputs.

use nalgebra::DVector;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::instance::Instance;

/// A reproducible random stream owned by a single run.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// An independent stream derived from this stream's seed and a label.
    /// Forking does not advance `self`.
    pub fn fork(&self, label: &str) -> RngStream {
        RngStream::new(splitmix64(splitmix64(self.seed) ^ fnv1a(label.as_bytes())))
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn normal_vector(&mut self, d: usize) -> DVector<f64> {
        DVector::from_fn(d, |_, _| self.normal())
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "cannot draw an index from an empty range");
        self.rng.random_range(0..n)
    }

    /// Draws an index from the (unnormalized, nonnegative) weights.
    pub fn categorical(&mut self, weights: &[f64]) -> usize {
        let total: f64 = weights.iter().sum();
        let mut u = self.uniform() * total;
        let mut last = 0;
        for (i, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            last = i;
            if u < w {
                return i;
            }
            u -= w;
        }
        last
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Seed for repetition `rep` of algorithm `algorithm_id` under `master`.
pub fn run_seed(master: u64, algorithm_id: &str, rep: u64) -> u64 {
    let h = splitmix64(master);
    let h = splitmix64(h ^ fnv1a(algorithm_id.as_bytes()));
    splitmix64(h ^ rep)
}

/// Noisy reward and cost of training arm `x`.
pub fn pull(inst: &Instance, x: usize, rng: &mut RngStream) -> (f64, f64) {
    let arm = &inst.train()[x];
    let eps = rng.normal();
    let eta = rng.normal();
    (
        inst.theta_r().dot(arm) + inst.sigma() * eps,
        inst.theta_c().dot(arm) + inst.gamma() * eta,
    )
}
