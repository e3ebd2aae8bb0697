//! Seeded random streams.
//!
//! Every stochastic step draws from its own stream derived from the run seed
//! and a tuple of integer tags (round, group, ...). Streams never depend on
//! scheduling, so results are identical for any number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Tag constants that keep the streams of different subsystems apart.
pub mod tag {
    pub const INIT: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const ACQUISITION: u64 = 3;
    pub const LEARN: u64 = 4;
    pub const REGION: u64 = 5;
    pub const EXPLORE: u64 = 6;
    pub const COMBINE: u64 = 7;
    pub const SYNTHETIC: u64 = 8;
    pub const TRIAL: u64 = 9;
    pub const FILL: u64 = 10;
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Mix a seed with a sequence of tags into a new 64-bit seed.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix(seed), |acc, &t| splitmix(acc ^ splitmix(t)))
}

pub fn substream(seed: u64, tags: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(seed, tags))
}
