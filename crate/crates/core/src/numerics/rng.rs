//! Seeded, splittable random streams.
//!
//! A stream is identified by a master seed and a stream id. The id selects an
//! independent ChaCha8 stream, so draws for (generation, candidate) pairs do
//! not depend on evaluation order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifier recorded in run reports so results can be reproduced.
pub const RNG_ALGORITHM: &str = "chacha8/seed_from_u64+splitmix64-stream";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomStream {
    pub seed: u64,
    pub stream: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RandomStream { seed, stream }
    }

    /// Stream keyed by a path of indices, e.g. `[tag, generation, candidate]`.
    pub fn derive(seed: u64, path: &[u64]) -> Self {
        let stream = path.iter().fold(0x243f_6a88_85a3_08d3u64, |acc, &p| {
            splitmix64(acc ^ splitmix64(p))
        });
        RandomStream { seed, stream }
    }

    pub fn into_rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stream tags, so different consumers of one master seed never collide.
pub(crate) mod tags {
    pub const GA: u64 = 1;
    pub const PSO: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const SYNTHETIC: u64 = 4;
    pub const MLP_INIT: u64 = 5;
    pub const CENTERS: u64 = 6;
    pub const INNER_SPLIT: u64 = 7;
}
