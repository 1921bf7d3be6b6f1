//! Seeded, splittable random streams.
//!
//! Every experiment owns one 64-bit master seed. The ChaCha key is derived
//! from the master seed and the 64-bit ChaCha stream id is split into a
//! purpose tag (high 16 bits) and a counter (low 48 bits), so that trial `t`
//! of any experiment can be regenerated in isolation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// What a derived stream is used for. Streams with different purposes are
/// independent even when they share a counter value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u16)]
pub enum Purpose {
    Generate = 1,
    Tree = 2,
    Subset = 3,
    Reconfigure = 4,
    Digraph = 5,
    Model = 6,
    Bootstrap = 7,
    Baseline = 8,
    Instance = 9,
}

const COUNTER_BITS: u32 = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Streams {
    master: u64,
}

impl Streams {
    pub fn new(master: u64) -> Self {
        Streams { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// The stream for `(purpose, index)`.
    pub fn stream(&self, purpose: Purpose, index: u64) -> StreamRng {
        assert!(index < 1 << COUNTER_BITS, "stream index {index} too large");
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(((purpose as u64) << COUNTER_BITS) | index);
        rng
    }

    /// A child family, e.g. one per graph size in a scaling sweep.
    pub fn child(&self, index: u64) -> Streams {
        use rand::RngCore;
        Streams::new(self.stream(Purpose::Instance, index).next_u64())
    }
}
