//! Counter-based seed derivation and deterministic RNG construction.
//!
//! Every stochastic quantity in the crate is driven by a seed derived from
//! `(master seed, stream, counter)`. Work items (Monte Carlo draws, harness
//! trials) own their counter, so serial and parallel executions produce
//! bit-identical results regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tag for data (sample) draws.
pub const STREAM_DATA: u64 = 0x01;
/// Stream tag for sign-vector draws.
pub const STREAM_SIGMA: u64 = 0x02;
/// Stream tag for harness trials.
pub const STREAM_TRIAL: u64 = 0x03;
/// Stream tag for synthetic instance generation.
pub const STREAM_INSTANCE: u64 = 0x04;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent seed for one work item.
pub fn derive_seed(master: u64, stream: u64, counter: u64) -> u64 {
    splitmix(splitmix(master ^ stream.wrapping_mul(GOLDEN)) ^ counter)
}

/// Deterministic RNG from a seed.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
