//! Seeded random streams.
//!
//! All stochastic code in the crate draws from [`ChaCha8Rng`] so that a run is
//! fully determined by its seed. Replicates get independent substreams of the
//! same seed, which keeps results identical whether they run serially or in
//! parallel.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as Rng;

pub fn seeded(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

/// Substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
