//! Counter-based random streams keyed by `(seed, stream, index)`.
//!
//! Each letter consumes exactly two 64-bit outputs, so letter `k` of a stream
//! can be regenerated on its own by seeking the ChaCha block counter.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WORD_STREAM: u64 = 0;
pub const POTENTIAL_STREAM: u64 = 1;
pub const PROBE_STREAM: u64 = 2;

/// Mixes a tag into a seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Sequential reader over one stream.
pub struct UniformStream {
    rng: ChaCha8Rng,
}

impl UniformStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        UniformStream { rng }
    }

    /// Positions the reader at pair `index`.
    pub fn at(seed: u64, stream: u64, index: u64) -> Self {
        let mut s = Self::new(seed, stream);
        s.rng.set_word_pos(index as u128 * 4);
        s
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        to_unit(self.rng.next_u64())
    }

    #[inline]
    pub fn next_pair(&mut self) -> [f64; 2] {
        [self.next_f64(), self.next_f64()]
    }
}

/// The uniform pair behind letter `index` of a stream.
pub fn letter_uniforms(seed: u64, stream: u64, index: u64) -> [f64; 2] {
    UniformStream::at(seed, stream, index).next_pair()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_access_matches_sequential() {
        let mut s = UniformStream::new(7, WORD_STREAM);
        for k in 0..100 {
            assert_eq!(s.next_pair(), letter_uniforms(7, WORD_STREAM, k));
        }
    }

    #[test]
    fn streams_differ() {
        assert_ne!(letter_uniforms(7, 0, 0), letter_uniforms(7, 1, 0));
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
    }
}
