//! Seeded randomness shared by every stochastic routine.
//!
//! All sampling goes through ChaCha8 seeded from a `u64`, which is stable
//! across platforms and crate releases. Sub-streams are derived by mixing a
//! label into the seed so that independent consumers never share a stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type CareRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> CareRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer; used to derive child seeds.
pub fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
