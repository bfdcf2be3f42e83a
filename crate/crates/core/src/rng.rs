//! Seeded randomness.
//!
//! Every random stream in the crate is a ChaCha8 generator keyed by
//! `ChaCha8Rng::seed_from_u64(seed)` and then moved to a fixed stream id, so a seed fully
//! determines instance sampling, configuration subsampling and synthetic tables
//! independently of each other.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub const STREAM_INSTANCES: u64 = 1;
pub const STREAM_SUBSAMPLE: u64 = 2;
pub const STREAM_SYNTHETIC: u64 = 3;

pub fn seeded(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
