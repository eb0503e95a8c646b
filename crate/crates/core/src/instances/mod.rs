//! Deterministic problem generators: hybrid MPC, cardinality-constrained
//! portfolio selection and random bounded MIQPs. Every generator is a pure
//! function of its configuration and seed.

mod mpc;
mod portfolio;
mod random;

pub use mpc::{gen_mpc, spectral_radius, MpcConfig, MpcForm};
pub use portfolio::{covariance_factor, gen_portfolio, PortfolioConfig};
pub use random::{gen_random_miqp, gen_random_miqp_with, RandomMiqpConfig};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub(crate) fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..rows).map(|_| (0..cols).map(|_| scale * normal(rng)).collect()).collect()
}
