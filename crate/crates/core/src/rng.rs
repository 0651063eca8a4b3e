//! Deterministic random streams.
//!
//! Every stream is a `ChaCha8Rng` seeded through [`sub_seed`], a SplitMix64
//! based mix of `(master seed, run index, arm index)`. Each arm of each run
//! draws from its own stream, so the reward sequence of an arm does not depend
//! on which other arms a policy pulls, and adding runs never perturbs the
//! streams of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere in the crate.
pub type BanditRng = ChaCha8Rng;

/// Arm slot reserved for policy-internal randomness (random tie breaking).
pub const POLICY_STREAM: u64 = u64::MAX;
/// Arm slot reserved for problem generation.
pub const GENERATOR_STREAM: u64 = u64::MAX - 1;
/// Arm slot reserved for deriving the run seed of a problem instance.
pub const RUN_STREAM: u64 = u64::MAX - 2;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(master ^ splitmix64(run)) ^ splitmix64(arm ^ C))`.
pub fn sub_seed(master: u64, run: u64, arm: u64) -> u64 {
    let run_part = splitmix64(master ^ splitmix64(run));
    splitmix64(run_part ^ splitmix64(arm ^ 0xD1B5_4A32_D192_ED03))
}

/// Seed for the `index`-th problem instance of a family.
pub fn instance_seed(master: u64, index: u64) -> u64 {
    sub_seed(master, index, GENERATOR_STREAM)
}

/// Master seed for the runs played on the `index`-th problem instance.
pub fn instance_run_seed(master: u64, index: u64) -> u64 {
    sub_seed(master, index, RUN_STREAM)
}

pub fn rng_from_seed(seed: u64) -> BanditRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream for `arm` in run `run` under master seed `master`.
pub fn stream(master: u64, run: u64, arm: u64) -> BanditRng {
    rng_from_seed(sub_seed(master, run, arm))
}
