//! Deterministic random streams.
//!
//! Every random draw in the simulator comes from a ChaCha stream keyed by
//! `(seed, sweep, purpose)`. Sweeps can therefore run in any order, or in
//! parallel, without changing a single output bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a random stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Clutter,
    Jitter,
    Noise,
    /// Interferer by index within the scene.
    Interferer(u32),
    /// Free-form streams for experiments and tests.
    Other(u32),
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Clutter => 1,
            Purpose::Jitter => 2,
            Purpose::Noise => 3,
            Purpose::Interferer(i) => 0x1_0000_0000 | u64::from(i),
            Purpose::Other(i) => 0x2_0000_0000 | u64::from(i),
        }
    }
}

// splitmix64 finalizer
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, sweep: u64, purpose: Purpose) -> u64 {
    mix(mix(mix(seed) ^ sweep) ^ purpose.tag())
}

pub fn stream(seed: u64, sweep: u64, purpose: Purpose) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, sweep, purpose))
}
