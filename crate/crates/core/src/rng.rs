//! Seeded random streams.
//!
//! Every stochastic component draws from its own ChaCha8 stream derived from
//! the single user seed: `ChaCha8Rng::seed_from_u64(seed)` with the stream
//! number set to the component's [`Stream`] id. Adding draws to one component
//! therefore never shifts the numbers seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Population = 1,
    NetworkDegrees = 2,
    NetworkWiring = 3,
    NetworkWeights = 4,
    Statuses = 5,
    Contagion = 6,
    Growth = 7,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    stream_with_offset(seed, which, 0)
}

/// A stream for the `index`-th repetition of a component (for example one
/// retry of a degree sequence).
pub fn stream_with_offset(seed: u64, which: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((which as u64) << 32) | index);
    rng
}
