//! Deterministic sub-seed derivation.
//!
//! A single root seed fans out into independent streams: `derive_seed(root,
//! stream, index)` mixes the three values through SplitMix64 finalizers, so
//! trial `i` of purpose `s` always receives the same seed regardless of the
//! order or thread in which trials execute.

/// Stream used for per-trial initial parameters.
pub const STREAM_INIT: u64 = 0x494e_4954;
/// Stream used for estimator-internal randomness (component reseeding).
pub const STREAM_ESTIMATOR: u64 = 0x4553_5449;
/// Stream used for dataset sampling.
pub const STREAM_DATA: u64 = 0x4441_5441;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(splitmix64(root) ^ stream) ^ index)`.
pub fn derive_seed(root: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(root) ^ stream) ^ index)
}
