//! Execution strategy for the data-parallel kernels.
//!
//! Every kernel that may run on the rayon pool goes through [`Exec`]. Work is
//! always split into the same fixed chunks and partial results are combined
//! in index order, so the sequential and parallel paths produce bitwise
//! identical output regardless of thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length used for reductions and row-blocked vector kernels.
pub const CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Runs on the rayon pool when the `parallel` feature is enabled,
    /// otherwise identical to `Sequential`.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map_collect<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Calls `f(offset, chunk)` on consecutive `CHUNK`-sized pieces of `data`.
    pub fn for_each_chunk_mut<F>(self, data: &mut [f64], f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            data.par_chunks_mut(CHUNK)
                .enumerate()
                .for_each(|(c, chunk)| f(c * CHUNK, chunk));
            return;
        }
        data.chunks_mut(CHUNK)
            .enumerate()
            .for_each(|(c, chunk)| f(c * CHUNK, chunk));
    }

    /// Deterministic chunked sum of `f(i)` over `0..n`.
    pub fn sum<F>(self, n: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let n_chunks = n.div_ceil(CHUNK);
        let partials = self.map_collect(n_chunks, |c| {
            let end = ((c + 1) * CHUNK).min(n);
            (c * CHUNK..end).map(&f).sum::<f64>()
        });
        partials.into_iter().sum()
    }

    pub fn dot(self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        self.sum(a.len(), |i| a[i] * b[i])
    }
}
