//! Labeled, reproducible random streams.
//!
//! Every consumer of randomness (initialization, shuffling, Bob's noise,
//! Eve's noise, fading draws) gets its own ChaCha stream derived from a
//! master seed, a label and an index. Adding a consumer never perturbs the
//! draws seen by another one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// FNV-1a, used only to turn labels into stream ids.
fn label_hash(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `(seed, label, index)`.
pub fn derive_seed(seed: u64, label: &str, index: u64) -> u64 {
    mix(seed ^ mix(label_hash(label) ^ mix(index.wrapping_add(0x9e37_79b9_7f4a_7c15))))
}

pub fn stream(seed: u64, label: &str, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(derive_seed(seed, label, index));
    rng
}
