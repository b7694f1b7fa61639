//! Seed-stream derivation. Every random source in an experiment is keyed off
//! one user seed plus a stream tag, so parallel work items never share a
//! generator and reproduce bit-for-bit regardless of scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const STREAM_PROFILE: u64 = 0x7072_6f66;
pub const STREAM_SENSE_NOISE: u64 = 0x6e6f_6973;
pub const STREAM_CALIB_INPUTS: u64 = 0x6361_6c69;
pub const STREAM_MEASURE_INPUTS: u64 = 0x6d65_6173;
pub const STREAM_DRIFT: u64 = 0x6472_6966;
pub const STREAM_ARITH: u64 = 0x6172_6974;

/// SplitMix64 finalizer applied to `seed` mixed with `stream`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream))
}
