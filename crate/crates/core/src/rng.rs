//! Seeded generators. Every stochastic component takes its generator
//! explicitly; independent components draw from distinct ChaCha8 streams of
//! one seed so that replicas are reproducible from `(seed, replica)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream offsets used by the policies and adversaries.
pub mod streams {
    pub const SAMPLING: u64 = 0;
    pub const CORE: u64 = 1;
    pub const ADVERSARY: u64 = 2;
    pub const HINTS: u64 = 3;
    /// Number of streams reserved per replica.
    pub const PER_REPLICA: u64 = 4;
}

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// The generator for `purpose` within replica `replica`.
pub fn replica_rng(seed: u64, replica: u64, purpose: u64) -> ChaCha8Rng {
    stream_rng(seed, replica * streams::PER_REPLICA + purpose)
}
