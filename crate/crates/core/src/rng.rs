//! Seed derivation.
//!
//! Every random stream in the crate is a `ChaCha8Rng` whose 64-bit seed is
//! derived from a master seed and a path of stream identifiers:
//!
//! ```text
//! s0     = splitmix64(master)
//! s(k+1) = splitmix64(s(k) ^ splitmix64(id(k) + 0x9E3779B97F4A7C15))
//! ```
//!
//! The path for a sweep row is `[stage, epsilon index, replica]`, for
//! example. Derivation is pure, so results never depend on the order in
//! which parallel jobs run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// One step of the SplitMix64 output function (Steele, Lea, Flood 2014).
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` along `path`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |s, &id| {
        splitmix64(s ^ splitmix64(id.wrapping_add(GOLDEN_GAMMA)))
    })
}

/// Generator used for all sampling.
pub fn stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform variate in `[0, 1)` that depends only on `(seed, a, b)`.
///
/// Used where a random decision is attached to an unordered pair and must
/// not depend on enumeration order.
pub fn hash_uniform(seed: u64, a: u64, b: u64) -> f64 {
    let h = derive_seed(seed, &[a, b]);
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
