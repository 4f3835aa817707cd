//! Seed derivation.
//!
//! A campaign owns one root seed. Every random draw (initial design, each
//! Thompson batch, annealing, observation noise) gets its own stream derived
//! from the root with [`derive_seed`], so the order in which draws happen never
//! changes what any single draw produces.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for `stream` under `root`.
pub fn derive_seed(root: u64, stream: u64) -> u64 {
    mix64(mix64(root) ^ mix64(stream.wrapping_add(0x632B_E59B_D9B4_E019)))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
