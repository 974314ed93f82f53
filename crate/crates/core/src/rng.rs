//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8 (`rand_chacha::ChaCha8Rng`),
//! keyed by `seed_from_u64(seed)`. Independent streams of the same key are used
//! for independent purposes, so results depend only on the seed, never on
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ChainRng = ChaCha8Rng;

pub const DATA_STREAM: u64 = 0;
pub const CHAIN_STREAM: u64 = 1;
pub const SHUFFLE_STREAM: u64 = 2;
pub const KL_STREAM: u64 = 3;

pub fn stream(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn data_rng(seed: u64) -> ChainRng {
    stream(seed, DATA_STREAM)
}

pub fn chain_rng(seed: u64) -> ChainRng {
    stream(seed, CHAIN_STREAM)
}
