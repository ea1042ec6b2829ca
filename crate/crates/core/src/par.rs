//! Deterministic parallel replication.
//!
//! Replica `i` always receives `stream_seed(master, i)` and results come back
//! in index order, so the output is independent of the worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::stream_seed;

/// Runs `f(index, seed)` for `index in 0..n` and returns results in order.
pub fn replicate<T, F>(n: usize, master_seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, u64) -> T + Sync + Send,
{
    (0..n)
        .into_par_iter()
        .map(|i| f(i, stream_seed(master_seed, i as u64)))
        .collect()
}

/// Same as [`replicate`] but stops at the first error (lowest index wins).
pub fn try_replicate<T, F>(n: usize, master_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync + Send,
{
    let out: Vec<Result<T>> = replicate(n, master_seed, f);
    out.into_iter().collect()
}

/// Runs `op` inside a pool of `workers` threads, or the global pool if `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, op: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(op()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::Resource(format!("thread pool: {e}")))?;
            Ok(pool.install(op))
        }
    }
}
