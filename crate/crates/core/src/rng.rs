//! Seed derivation.
//!
//! Every random phase draws from its own ChaCha8 stream derived from one
//! root seed, a phase tag and an index, so results do not depend on the
//! order in which parallel work completes.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Phase tags mixed into substream seeds.
pub mod tag {
    pub const SCATTER: u64 = 0x5c47;
    pub const KRZANOWSKI: u64 = 0x6b72;
    pub const CONSENSUS: u64 = 0xc055;
    pub const RESTART: u64 = 0x7e57;
    pub const MONTE_CARLO: u64 = 0x3c3c;
    pub const DATAGEN: u64 = 0xda7a;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `seed`, a phase `tag` and an `index`.
pub fn derive(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(tag)) ^ index)
}

/// A generator for the `index`-th substream of phase `tag`.
pub fn substream(seed: u64, tag: u64, index: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, tag, index))
}
