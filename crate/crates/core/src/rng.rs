//! Seeded random streams.
//!
//! Every random quantity is drawn from a ChaCha8 generator keyed by a
//! 64-bit master seed and positioned on a 64-bit stream id, so a run can
//! fan out independent streams deterministically.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Recorded in run manifests; results are only reproducible across
/// implementations using the same generator.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha 0.9); key = seed_from_u64(master_seed); stream = set_stream(stream_id)";

/// Master seed plus stream id identifying one random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct RngStamp {
    pub seed: u64,
    pub stream: u64,
}

impl RngStamp {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Stamp for sub-stream `index` of this stream.
    ///
    /// Sub-streams mix the parent stream id and index through SplitMix64 so
    /// nested fan-outs do not collide with sibling streams.
    pub fn substream(&self, index: u64) -> Self {
        Self { seed: self.seed, stream: splitmix64(self.stream ^ splitmix64(index)) }
    }
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
