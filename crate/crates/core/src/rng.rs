//! Keyed random streams.
//!
//! Every random decision in the pipeline draws from a ChaCha stream whose
//! seed is derived from a base seed plus a short key path (gauge index,
//! read index, ...). Results therefore do not depend on execution order or
//! on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mixes a base seed with a key path into a single 64-bit seed.
pub fn derive_seed(seed: u64, key: &[u64]) -> u64 {
    let mut acc = splitmix64(seed);
    for &k in key {
        acc = splitmix64(acc ^ splitmix64(k.wrapping_add(0x632b_e59b_d9b4_e019)));
    }
    acc
}

/// A generator for the stream identified by `(seed, key)`.
pub fn stream(seed: u64, key: &[u64]) -> StreamRng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, key))
}

// Domain tags keep streams for different purposes apart.
pub(crate) const TAG_GAUGE: u64 = 0x6761_7567;
pub(crate) const TAG_READ: u64 = 0x7265_6164;
pub(crate) const TAG_ICE: u64 = 0x6963_6531;
pub(crate) const TAG_ICE_TRANSIENT: u64 = 0x6963_6532;
pub(crate) const TAG_POST: u64 = 0x706f_7374;
pub(crate) const TAG_EMBED: u64 = 0x656d_6264;
pub(crate) const TAG_SHIM: u64 = 0x7368_696d;
pub(crate) const TAG_VOTE: u64 = 0x766f_7465;
pub(crate) const TAG_GEN: u64 = 0x6765_6e31;
