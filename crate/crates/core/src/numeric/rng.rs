//! Seeded random streams.
//!
//! A [`Seed`] expands into ChaCha8 keystreams. Each consumer asks for a
//! stream by `(domain, index)`, which maps to a distinct ChaCha stream id, so
//! work split across threads draws from disjoint, reproducible sequences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Root seed for every stochastic computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

/// Which consumer a stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamDomain {
    Composition = 1,
    ProductSpace = 2,
    Calibration = 3,
}

const INDEX_BITS: u32 = 48;

impl Seed {
    /// Sub-stream `index` of `domain`. Indices must fit in 48 bits.
    pub fn stream(self, domain: StreamDomain, index: u64) -> ChaCha8Rng {
        assert!(index < 1 << INDEX_BITS, "stream index {index} out of range");
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(((domain as u64) << INDEX_BITS) | index);
        rng
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}
