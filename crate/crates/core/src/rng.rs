//! Seed derivation.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] seeded through
//! [`sub_seed`]. Trial `k` of an experiment with master seed `s` uses
//! `sub_seed(s, k)`, which is the `(k + 1)`-th output of a SplitMix64 generator
//! whose state starts at `s`:
//!
//! ```text
//! z = s + (k + 1) * 0x9E3779B97F4A7C15        (wrapping)
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9   (wrapping)
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB   (wrapping)
//! z =  z ^ (z >> 31)
//! ```
//!
//! The resulting 64-bit value is expanded into a ChaCha8 key with
//! `SeedableRng::seed_from_u64`. Because a trial's stream depends only on
//! `(s, k)`, trials can run in any order or in parallel. This function is
//! frozen: changing it changes every recorded result.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_2: u64 = 0x94D0_49BB_1331_11EB;

/// SplitMix64 output finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX_1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_2);
    z ^ (z >> 31)
}

/// Sub-seed for stream `index` under `master`.
pub fn sub_seed(master: u64, index: u64) -> u64 {
    mix64(master.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Generator seeded directly from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for trial `index` of an experiment.
pub fn trial_rng(master: u64, index: u64) -> TrialRng {
    rng_from_seed(sub_seed(master, index))
}
