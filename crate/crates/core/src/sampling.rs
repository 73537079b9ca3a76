//! Seeding contract for every stochastic routine in the crate.
//!
//! Trials are generated in chunks of [`CHUNK_SIZE`]. Chunk `c` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` switched to stream `c`, so the output is
//! a function of `(seed, n)` alone, whatever the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const GENERATOR: &str = "ChaCha8Rng/stream-per-chunk";

pub const CHUNK_SIZE: usize = 1 << 16;

pub fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// `(chunk index, chunk length)` covering `n` trials.
pub fn chunk_ranges(n: usize) -> Vec<(usize, usize)> {
    (0..n.div_ceil(CHUNK_SIZE))
        .map(|c| (c, CHUNK_SIZE.min(n - c * CHUNK_SIZE)))
        .collect()
}
