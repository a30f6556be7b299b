//! Seeded, splittable random streams.
//!
//! Every stream is ChaCha8 keyed by a master seed with an explicit stream
//! id, so a `(master, id)` pair names the same sequence on every platform.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

pub fn stream(master: u64, id: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(id);
    rng
}

/// Seed for trial `index` of a run with the given master seed.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    stream(master ^ 0x9e37_79b9_7f4a_7c15, index).next_u64()
}

/// Hands out independent sub-streams in a deterministic order.
#[derive(Debug, Clone)]
pub struct Seeder {
    master: u64,
    next: u64,
}

impl Seeder {
    pub fn new(master: u64) -> Self {
        Seeder { master, next: 0 }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    pub fn stream(&mut self) -> Stream {
        let s = stream(self.master, self.next);
        self.next += 1;
        s
    }

    /// A child seeder whose streams are disjoint from this one's.
    pub fn fork(&mut self) -> Seeder {
        Seeder::new(self.stream().next_u64())
    }
}
