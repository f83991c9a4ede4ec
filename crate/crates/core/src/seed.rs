//! Deterministic seed derivation.
//!
//! Every stochastic sub-task (a Monte Carlo run, a bootstrap replicate, a
//! fold-level estimator split) gets its own seed derived from a master
//! seed and a logical path of tags. Results therefore do not depend on
//! execution order or thread count.

pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from `seed` and a logical path.
pub fn derive(seed: u64, path: &[u64]) -> u64 {
    let mut s = splitmix64(seed ^ 0xA076_1D64_78BD_642F);
    for &t in path {
        s = splitmix64(s ^ t.wrapping_mul(0xD6E8_FEB8_6659_FD93).rotate_left(23));
    }
    s
}

// Tag vocabulary for seed paths. Values are arbitrary but frozen: changing
// them changes every derived stream.
pub const TAG_RUN: u64 = 1;
pub const TAG_METHOD: u64 = 2;
pub const TAG_FOLDS: u64 = 3;
pub const TAG_CV_IN: u64 = 4;
pub const TAG_CV_OUT: u64 = 5;
pub const TAG_FULL_FIT: u64 = 6;
pub const TAG_BOOT: u64 = 7;
pub const TAG_GEN: u64 = 8;
pub const TAG_SPLIT: u64 = 9;
pub const TAG_SWEEP: u64 = 10;
pub const TAG_POOL: u64 = 11;
