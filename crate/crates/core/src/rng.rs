//! Per-path random streams.
//!
//! Path `p` of a run with master seed `s` always draws from the same
//! generator, whichever worker simulates it.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

/// One step of the SplitMix64 sequence, used as a 64-bit mixer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the stream for `path`.
pub fn path_seed(master_seed: u64, path: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ splitmix64(path.wrapping_mul(0xd6e8_feb8_6659_fd93)))
}

/// Generator for `path` under `master_seed`.
pub fn path_rng(master_seed: u64, path: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(path_seed(master_seed, path))
}
