//! Seeded random streams.
//!
//! Every stochastic routine draws from a ChaCha20 stream keyed by a `(seed,
//! stream)` pair, so results are bit-identical across platforms and the
//! realizations of a Monte-Carlo sweep never share state.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

/// Stream identifiers used by the library. Callers mixing their own streams
/// should stay clear of the low range.
pub mod streams {
    pub const DATA: u64 = 1;
    pub const MIXING: u64 = 2;
    pub const MARKOV: u64 = 3;
    pub const COVARIANCES: u64 = 4;
    pub const OUTLIERS: u64 = 5;
    pub const RESTARTS: u64 = 16;
    pub const PERMUTATION: u64 = 32;
    pub const PROJECTION: u64 = 48;
    pub const FOLDS: u64 = 64;
    pub const PENALTY: u64 = 80;
}

/// RNG for `(seed, stream)`.
pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a fresh seed from a base seed and an index (realization, restart,
/// permutation...). SplitMix64 finalizer.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
