//! Seed-derived random streams.
//!
//! Every run owns one root seed. Independent consumers (subset picking,
//! reinitialisation, the local optimiser) draw from separate ChaCha streams
//! so that extra draws in one never shift another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Subsets = 1,
    Reinit = 2,
    Local = 3,
}

pub fn stream(seed: u64, which: Stream) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}

/// Plain seeded generator for data generation and tests.
pub fn seeded(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}
