//! Deterministic random substreams derived from a single root seed.
//!
//! Each `(component, index)` pair maps to its own ChaCha stream, so the
//! draws used for graph `g` do not depend on how many other graphs,
//! trials or components were requested.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Component {
    GraphSampling = 1,
    Probe = 2,
    Walks = 3,
    Acceptance = 4,
    InitialState = 5,
    Shuffle = 6,
    Urn = 7,
    Suite = 8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStreams {
    root: u64,
}

impl SeedStreams {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    /// Stream for `component`, instance `index` (index uses the low 56 bits).
    pub fn rng(&self, component: Component, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root);
        rng.set_stream(((component as u64) << 56) | (index & ((1 << 56) - 1)));
        rng
    }
}
