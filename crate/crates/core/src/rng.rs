//! Seed derivation for per-environment and per-episode random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a stream label (`purpose`, `index`).
pub fn derive_seed(seed: u64, purpose: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(purpose)) ^ index)
}

pub fn stream(seed: u64, purpose: u64, index: u64) -> SimRng {
    SimRng::seed_from_u64(derive_seed(seed, purpose, index))
}

/// Stream labels.
pub mod purpose {
    pub const TRAIN_ENV: u64 = 1;
    pub const EVAL_EPISODE: u64 = 2;
    pub const POLICY_INIT: u64 = 3;
    pub const ACTION_SAMPLING: u64 = 4;
    pub const MINIBATCH: u64 = 5;
    pub const RESUME: u64 = 6;
    pub const START_LENGTH: u64 = 7;
}
