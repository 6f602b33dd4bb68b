//! Counter-based random streams.
//!
//! Every sample draws from its own ChaCha8 stream keyed by
//! `(seed, domain, index)`, so results never depend on which worker ran it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type StreamRng = ChaCha8Rng;

pub const DOMAIN_BRIDGE: u64 = 1;
pub const DOMAIN_REJECTION: u64 = 2;
pub const DOMAIN_MCMC: u64 = 3;
pub const DOMAIN_HOLONOMY: u64 = 4;
pub const DOMAIN_MOMENTS: u64 = 5;

/// Independent stream number `index` within `domain` of `seed`.
pub fn substream(seed: u64, domain: u64, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

#[inline]
pub fn standard_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
