//! Execution strategy for the embarrassingly parallel scans.
//!
//! With the `parallel` feature enabled (the default) scans fan out over rayon's
//! global pool. Without it every scan runs on the calling thread. Output order
//! never depends on the strategy.

/// How a scan distributes independent work items.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Falls back to `Sequential` when built without the `parallel` feature.
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
    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            _ => items.iter().map(f).collect(),
        }
    }

    /// Applies `f` to consecutive chunks of `data` of length `chunk` and
    /// returns the per-chunk results in order. The chunking is independent of
    /// the thread count, so reductions over the results are reproducible.
    pub fn map_chunks_mut<T, R, F>(self, data: &mut [T], chunk: usize, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(&mut [T]) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => {
                use rayon::prelude::*;
                data.par_chunks_mut(chunk).map(f).collect()
            }
            _ => data.chunks_mut(chunk).map(f).collect(),
        }
    }
}
