//! Deterministic random-stream plumbing.
//!
//! Experiments never share one sequential generator across trials. Instead a
//! [`SeedSequence`] derives an independent ChaCha substream per trial index,
//! so a run is reproducible bit-for-bit regardless of how trials are
//! scheduled across threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Master seed from which independent substreams and child scopes derive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSequence {
    master: u64,
}

impl SeedSequence {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Generator for substream `index`. Distinct indices give streams with
    /// independent ChaCha keys; the same `(master, index)` pair always gives
    /// the same stream.
    pub fn substream(&self, index: u64) -> ChaCha12Rng {
        let mut state = self.master ^ index.wrapping_mul(GOLDEN).wrapping_add(index);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha12Rng::from_seed(key)
    }

    /// Derived scope for a nested experiment, keyed by `tag`. Children with
    /// different tags never collide with each other or with the parent's
    /// substreams.
    pub fn child(&self, tag: u64) -> SeedSequence {
        let mut state = self.master ^ tag.wrapping_mul(0xd134_2543_de82_ef95);
        splitmix64(&mut state);
        SeedSequence {
            master: splitmix64(&mut state),
        }
    }
}
