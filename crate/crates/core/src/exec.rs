//! Execution helpers for the data-parallel inner loops.
//!
//! Every hot loop in the crate (dataset synthesis, Monte Carlo trial
//! batches, Gram accumulation) is expressed through these three
//! primitives. With the `parallel` feature (default) `Exec::Auto` runs
//! them on the rayon pool; without it, or with `Exec::Sequential`, they
//! run on the calling thread. Results are bitwise identical either way:
//! work is partitioned so that every output element is reduced in a
//! fixed order regardless of how chunks are scheduled.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Whether the crate was built with the `parallel` feature.
pub const PARALLEL_ENABLED: bool = cfg!(feature = "parallel");

/// Execution strategy for a batch operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    /// Parallel when the `parallel` feature is enabled, sequential otherwise.
    Auto,
    /// Always run on the calling thread.
    Sequential,
}

impl Exec {
    #[cfg(feature = "parallel")]
    fn is_parallel(self) -> bool {
        self == Exec::Auto
    }
}

/// Maps `f` over `0..n`, collecting results in index order.
pub fn map_indexed<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Splits `0..n` into contiguous chunks of at most `chunk` elements and
/// maps `f` over each `(start, end)` range, collecting chunk results in
/// range order.
pub fn map_chunks<T, F>(exec: Exec, n: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize, usize) -> T + Sync + Send,
{
    assert!(chunk > 0, "chunk size must be positive");
    let starts: Vec<usize> = (0..n).step_by(chunk).collect();
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return starts
            .into_par_iter()
            .map(|s| f(s, (s + chunk).min(n)))
            .collect();
    }
    let _ = exec;
    starts
        .into_iter()
        .map(|s| f(s, (s + chunk).min(n)))
        .collect()
}

/// Splits `data` into contiguous chunks of at most `chunk` elements and
/// hands each `(chunk_start, slice)` to `f`. Chunks are disjoint, so
/// mutation is race-free by construction.
pub fn for_each_chunk_mut<T, F>(exec: Exec, data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    assert!(chunk > 0, "chunk size must be positive");
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        data.par_chunks_mut(chunk)
            .enumerate()
            .for_each(|(i, slice)| f(i * chunk, slice));
        return;
    }
    let _ = exec;
    for (i, slice) in data.chunks_mut(chunk).enumerate() {
        f(i * chunk, slice);
    }
}

/// Chunk size that spreads `n` items over the available threads with a
/// little oversubscription for load balancing.
pub(crate) fn balanced_chunk(n: usize) -> usize {
    #[cfg(feature = "parallel")]
    {
        let threads = rayon::current_num_threads().max(1);
        (n / (threads * 4)).max(1)
    }
    #[cfg(not(feature = "parallel"))]
    {
        n.max(1)
    }
}
