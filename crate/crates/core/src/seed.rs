//! Seed derivation. Every stochastic component in an experiment draws from a
//! generator seeded by mixing the master seed with a path of integer tags
//! (run index, evaluation index, purpose), so results do not depend on the
//! order in which runs are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate. ChaCha output is stable across
/// platforms and crate versions, which keeps seeded CSV output byte-identical.
pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix64(master), |acc, &t| {
        splitmix64(acc ^ splitmix64(t))
    })
}

pub fn rng_for(master: u64, tags: &[u64]) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, tags))
}

// Purpose tags, so that e.g. the start grid and the agent of run 3 never
// share a stream.
pub const TAG_START: u64 = 1;
pub const TAG_AGENT: u64 = 2;
pub const TAG_MODEL: u64 = 3;
pub const TAG_LEARNER: u64 = 4;
pub const TAG_TUNER: u64 = 5;
pub const TAG_EVAL: u64 = 6;
pub const TAG_REEVAL: u64 = 7;
pub const TAG_PREDICT: u64 = 8;
