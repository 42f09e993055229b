//! Adaptive channel recommendation for opportunistic spectrum access.
//!
//! Secondary users share `M` primary channels that flip between busy and
//! idle as independent two-state Markov chains. Users that transmit
//! successfully broadcast the channel ID; everyone else decides with a
//! branching probability whether to pick among recommended channels or the
//! rest. This crate provides
//!
//! - [`channel`]: the Markov channels and the experiment families,
//! - [`mdp`]: the recommendation-count MDP, its transition laws and oracles,
//! - [`mras`]: model reference adaptive search over stationary policies,
//! - [`hetero`]: the per-channel weight policy for heterogeneous channels,
//! - [`qlearn`]: a tabular Q-learning baseline,
//! - [`sim`]: the slotted network simulator used as ground truth.

pub mod channel;
pub mod combinatorics;
pub mod error;
pub mod hetero;
pub mod mdp;
pub mod mras;
pub mod qlearn;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};

/// Deterministic generator used everywhere a random stream is needed.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> Rng {
    use rand::SeedableRng;
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed for item `index` of a family of runs sharing `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    splitmix(base ^ splitmix(index))
}
