//! Reproducible seed derivation.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] keyed by a
//! 64-bit seed. Independent streams are split off in two ways:
//!
//! * [`mix64`] derives child seeds (sweep point, repetition) from a parent
//!   seed and an index. It is the SplitMix64 finalizer applied to
//!   `parent + GOLDEN * (index + 1)`.
//! * [`stream_rng`] selects one of ChaCha's 2^64 word streams for a given
//!   seed, so the training sequence and the noise of one run never share
//!   keystream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Keystream used for the receiver's known training symbols.
pub const STREAM_TRAINING: u64 = 1;
/// Keystream used for receiver noise.
pub const STREAM_NOISE: u64 = 2;
/// Keystream used for random payload bits.
pub const STREAM_PAYLOAD: u64 = 3;

/// SplitMix64 output finalizer.
#[inline]
pub fn finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed number `index` of `parent`.
#[inline]
pub fn mix64(parent: u64, index: u64) -> u64 {
    finalize(parent.wrapping_add(GOLDEN.wrapping_mul(index.wrapping_add(1))))
}

/// Folds a sequence of words into `parent`, one [`mix64`] per word.
pub fn mix_words(parent: u64, words: impl IntoIterator<Item = u64>) -> u64 {
    words.into_iter().fold(parent, mix64)
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
