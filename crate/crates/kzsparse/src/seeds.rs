//! Seed derivation for reproducible experiments.
//!
//! Every trial gets its own seed derived from `(base_seed, trial_index)`
//! with a splitmix64 chain, and each trial owns four independent
//! sub-streams (matrix, signal, noise, schedule). Derivation depends only
//! on the indices, never on execution order, so trials can run on any
//! number of threads and still reproduce bit-identically.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One step of the splitmix64 generator.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes a seed with a stream tag into a new independent seed.
pub fn mix(seed: u64, stream: u64) -> u64 {
    let mut state = seed;
    let a = splitmix64(&mut state);
    let mut state2 = a ^ stream.wrapping_mul(0xd605_bbb5_8c8a_bc2d);
    splitmix64(&mut state2)
}

/// Seed for trial `t` of an experiment.
pub fn trial_seed(base_seed: u64, trial_index: u64) -> u64 {
    mix(base_seed, trial_index)
}

/// The independent random streams a single trial consumes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubStream {
    Matrix,
    Signal,
    Noise,
    Schedule,
}

impl SubStream {
    fn tag(self) -> u64 {
        match self {
            SubStream::Matrix => 1,
            SubStream::Signal => 2,
            SubStream::Noise => 3,
            SubStream::Schedule => 4,
        }
    }
}

/// Seed for one sub-stream of a trial.
pub fn substream_seed(trial_seed: u64, sub: SubStream) -> u64 {
    mix(trial_seed, sub.tag())
}

/// Deterministic generator for a derived seed.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
