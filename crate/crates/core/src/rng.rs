//! Repo-wide deterministic randomness.
//!
//! Every random draw in the crate comes from ChaCha8 (`rand_chacha`), seeded
//! from a 64-bit seed through `seed_from_u64`. Independent streams for the
//! same seed (per epoch, per trial, per purpose) use ChaCha's 64-bit stream
//! selector. Gaussian variates use `rand_distr::StandardNormal` (Ziggurat).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type DetRng = ChaCha8Rng;

/// Stream tags so that the same user seed never feeds two purposes.
pub mod streams {
    pub const SAMPLE: u64 = 0x01 << 56;
    pub const INIT: u64 = 0x02 << 56;
    pub const SHUFFLE: u64 = 0x03 << 56;
    pub const NOISE: u64 = 0x04 << 56;
    pub const MODEL_SAMPLER: u64 = 0x05 << 56;
    pub const TRIAL: u64 = 0x06 << 56;
    pub const FIXTURE: u64 = 0x07 << 56;
    pub const ENTROPY_MC: u64 = 0x08 << 56;
}

pub fn seeded(seed: u64) -> DetRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for `(seed, stream)`; streams are independent for a fixed seed.
pub fn substream(seed: u64, stream: u64) -> DetRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer: derives a child seed from `(seed, index)`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Uniform draw in `[-scale, scale]`; exactly zero when `scale == 0`.
#[inline]
pub fn symmetric_uniform<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    let u: f64 = rng.random();
    scale * (2.0 * u - 1.0)
}
