//! Seed fan-out.
//!
//! Every random stream in a run is keyed by a path of integers hashed
//! together with the master seed through the SplitMix64 finalizer:
//!
//! ```text
//! state = master
//! for each key k in path: state = mix(state ^ mix(k + GOLDEN))
//! ```
//!
//! Streams are keyed by what they belong to (a stream tag, the mode-group
//! order of a channel, the sequence index), never by a position in a list,
//! so adding or removing a channel leaves every other channel's streams
//! untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `master` and a key path.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(master.wrapping_add(GOLDEN)), |state, &k| mix(state ^ mix(k.wrapping_add(GOLDEN))))
}

pub fn rng(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, path))
}

/// Stream tags used as the first key of a path.
pub mod tag {
    pub const MUX_PHASE: u64 = 1;
    pub const DEMUX_PHASE: u64 = 2;
    pub const CHANNEL_STATIC: u64 = 3;
    pub const CHANNEL_BLOCK: u64 = 4;
    pub const OPTICAL_NOISE: u64 = 5;
    pub const ELECTRICAL_NOISE: u64 = 6;
    pub const CAPTURE_OFFSET: u64 = 7;
    pub const PRBS_SEED: u64 = 8;
}
