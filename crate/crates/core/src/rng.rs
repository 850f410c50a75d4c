//! Seeded, splittable random streams.
//!
//! A stream is identified by `(seed, stream_id)` and backed by ChaCha8, whose
//! output is fixed across platforms. Batch samplers give every sample its own
//! stream so that results do not depend on how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, 0)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Stream number `index` under the same seed.
    pub fn substream(&self, index: u64) -> Self {
        Self::new(self.seed, index)
    }

    /// A new seed family keyed by `label`, disjoint from this one.
    pub fn derive(&self, label: u64) -> Self {
        let mixed =
            splitmix64(self.seed ^ splitmix64(label.wrapping_add(self.stream_id.rotate_left(17))));
        Self::new(mixed, 0)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
