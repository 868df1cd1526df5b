//! Seeded generator helpers. Every stochastic operation takes an explicit
//! generator; nothing reads a global RNG.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Generator for `seed`, separated into independent streams by `stream`.
pub fn seeded(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream identifiers so the same repeat seed never feeds two consumers.
pub mod streams {
    pub const SPLIT: u64 = 1;
    pub const INIT: u64 = 2;
    pub const SHUFFLE: u64 = 3;
    pub const DROPOUT: u64 = 4;
    pub const SYNTH_LABELS: u64 = 5;
    pub const SYNTH_PLANTED: u64 = 6;
    pub const SYNTH_VALUES: u64 = 7;
}
