//! Seed derivation for reproducible parallel sampling.
//!
//! Every parallel task draws from its own ChaCha stream, selected by the task
//! index under a shared master seed, so results do not depend on how tasks
//! are scheduled across workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Samples per parallel chunk in Monte Carlo loops.
pub const CHUNK: u64 = 1 << 16;

/// Random stream `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw from the open interval `(0, 1)`.
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Runs `task(chunk_index, chunk_len, rng)` over `total` samples split into
/// fixed-size chunks, on a pool of `workers` threads, and returns the
/// per-chunk results in chunk order.
pub fn par_chunks<T, F>(total: u64, seed: u64, workers: usize, task: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64, &mut ChaCha8Rng) -> T + Sync,
{
    use rayon::prelude::*;
    let chunks = total.div_ceil(CHUNK);
    let run = || {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let len = CHUNK.min(total - c * CHUNK);
                let mut rng = stream_rng(seed, c);
                task(c, len, &mut rng)
            })
            .collect::<Vec<_>>()
    };
    match rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
    {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}
