//! Counter-style seeding for reproducible, worker-count independent simulations.
//!
//! Every replication derives its seed from `(master_seed, experiment_id,
//! cell_index, rep_index)` through [`mix64`], and every replication then splits
//! into tagged sub-streams (data `X`, model-1 noise `U`, model-2 noise `V`).
//! Nothing depends on scheduling order, so results are identical for any
//! number of workers.
//!
//! The avalanche step is SplitMix64 (Steele, Lea & Flood 2014):
//!
//! ```text
//! z += 0x9E3779B97F4A7C15
//! z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z  = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! z  =  z ^ (z >> 31)
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const SPLITMIX_M1: u64 = 0xBF58_476D_1CE4_E5B9;
const SPLITMIX_M2: u64 = 0x94D0_49BB_1331_11EB;

/// Sub-stream tag for the data sample `X`.
pub const TAG_DATA: u64 = 0;
/// Sub-stream tag for the first model's noise `U`.
pub const TAG_NOISE_U: u64 = 1;
/// Sub-stream tag for the second model's noise `V`.
pub const TAG_NOISE_V: u64 = 2;

#[inline]
pub fn splitmix64(z: u64) -> u64 {
    let mut z = z.wrapping_add(SPLITMIX_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(SPLITMIX_M1);
    z = (z ^ (z >> 27)).wrapping_mul(SPLITMIX_M2);
    z ^ (z >> 31)
}

/// Order-sensitive hash of a tuple of words.
pub fn mix64(parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(parts.len() as u64), |acc, &p| {
            splitmix64(acc ^ splitmix64(p))
        })
}

/// Seed of one Monte Carlo replication.
pub fn replication_seed(master_seed: u64, experiment_id: u64, cell_index: u64, rep_index: u64) -> u64 {
    mix64(&[master_seed, experiment_id, cell_index, rep_index])
}

/// Seed of a tagged sub-stream of a replication.
pub fn substream_seed(rep_seed: u64, tag: u64) -> u64 {
    mix64(&[rep_seed, tag])
}

/// A seeded random stream with a stable identifier.
///
/// The identifier is the seed itself; two streams with different ids are
/// statistically independent ChaCha8 sequences.
#[derive(Debug, Clone)]
pub struct RngStream {
    id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            id: seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Tagged child stream derived from this stream's id.
    pub fn child(&self, tag: u64) -> Self {
        Self::new(substream_seed(self.id, tag))
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
