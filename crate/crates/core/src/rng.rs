//! Seeded random streams.
//!
//! Every consumer of randomness gets its own ChaCha stream derived from the run
//! seed, so adding draws in one place never shifts the numbers seen elsewhere.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Points = 2,
    Noise = 3,
    EpistemicIndex = 4,
    DropoutMask = 5,
    Hmc = 6,
    Prediction = 7,
    PriorInit = 8,
    EpinetInit = 9,
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which as u64);
    rng
}
