//! Counter-based innovation streams.
//!
//! The value of the iid field at an absolute lattice index is a pure function of
//! `(seed, stream, index)`: the ChaCha8 keystream is keyed by the seed, the stream
//! selects a replica/sampler substream, and the word position encodes the index.
//! Boxes of any shape and traversal order therefore see identical values.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::law::InnovationLaw;
use crate::lattice::MultiIndex;

/// 32-bit ChaCha words consumed per lattice site (two `u64` draws).
const WORDS_PER_SITE: u128 = 4;

/// Substream identifier for `(replica, tag)`. Tags distinguish independent
/// sequences used inside one replica (e.g. the factors of a product field).
pub fn substream(replica: u64, tag: u8) -> u64 {
    assert!(replica < (1 << 56), "replica index too large");
    (replica << 8) | tag as u64
}

/// Bits available per coordinate in the counter encoding.
fn bits_per_axis(dim: usize) -> u32 {
    assert!((1..=16).contains(&dim), "counter encoding supports 1 <= d <= 16");
    (64 / dim as u32).min(62)
}

/// Injective map from a bounded region of `Z^d` to a 64-bit counter. The last axis
/// occupies the low bits, so consecutive sites along it have consecutive counters.
fn encode(coords: &[i64]) -> u64 {
    let bits = bits_per_axis(coords.len());
    let offset = 1i64 << (bits - 1);
    let mut counter: u64 = 0;
    for &c in coords {
        let shifted = c + offset;
        assert!(
            shifted >= 0 && (shifted as u64) < (1u64 << bits),
            "lattice coordinate {c} outside the counter range for d={}",
            coords.len()
        );
        counter = (counter << bits) | shifted as u64;
    }
    counter
}

/// The iid field `(ε_j)` restricted to one substream.
#[derive(Debug, Clone)]
pub struct InnovationStream {
    law: InnovationLaw,
    seed: u64,
    stream: u64,
}

impl InnovationStream {
    pub fn new(law: InnovationLaw, seed: u64, stream: u64) -> Self {
        InnovationStream { law, seed, stream }
    }

    pub fn law(&self) -> &InnovationLaw {
        &self.law
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// `ε` at an absolute lattice index.
    pub fn value_at(&self, index: &MultiIndex) -> f64 {
        let mut rng = self.rng();
        rng.set_word_pos(encode(index.coords()) as u128 * WORDS_PER_SITE);
        let w0 = rng.next_u64();
        let w1 = rng.next_u64();
        self.law.sample_from_words(w0, w1)
    }

    /// Dense row-major fill (last axis fastest) of the box with the given lower
    /// corner and extents.
    pub fn fill(&self, lower: &[i64], extents: &[usize]) -> Vec<f64> {
        assert_eq!(lower.len(), extents.len(), "dimension mismatch");
        let total: usize = extents.iter().product();
        let mut out = Vec::with_capacity(total);
        if total == 0 {
            return out;
        }
        let d = lower.len();
        let row_len = extents[d - 1];
        let mut rng = self.rng();
        let mut row_start = lower.to_vec();
        for _ in 0..total / row_len {
            rng.set_word_pos(encode(&row_start) as u128 * WORDS_PER_SITE);
            for _ in 0..row_len {
                let w0 = rng.next_u64();
                let w1 = rng.next_u64();
                out.push(self.law.sample_from_words(w0, w1));
            }
            // advance the outer odometer
            for axis in (0..d - 1).rev() {
                row_start[axis] += 1;
                if row_start[axis] < lower[axis] + extents[axis] as i64 {
                    break;
                }
                row_start[axis] = lower[axis];
            }
        }
        out
    }
}
