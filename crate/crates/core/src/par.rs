//! Worker pools for the data-parallel kernels.
//!
//! Every kernel that runs through an [`Executor`] computes each output block
//! from its inputs alone, so results do not depend on how blocks are split
//! between workers. Reductions are always performed sequentially in block
//! order by the caller.

use std::fmt;

/// Where block-parallel loops execute.
#[derive(Default)]
pub enum Executor {
    /// Plain loops on the calling thread.
    #[default]
    Sequential,
    /// A dedicated rayon pool with a pinned number of workers.
    #[cfg(feature = "parallel")]
    Pool(rayon::ThreadPool),
}

impl fmt::Debug for Executor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Executor({} workers)", self.workers())
    }
}

// minimum blocks handed to one rayon task
#[cfg(feature = "parallel")]
const MIN_CHUNK_BLOCKS: usize = 512;

impl Executor {
    /// An executor with `workers` threads. With one worker, or when the crate
    /// is built without the `parallel` feature, loops run sequentially.
    pub fn new(workers: usize) -> Self {
        let workers = workers.max(1);
        #[cfg(feature = "parallel")]
        if workers > 1 {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .expect("failed to build worker pool");
            return Executor::Pool(pool);
        }
        if workers > 1 {
            log::warn!("built without the `parallel` feature; running {workers} workers sequentially");
        }
        Executor::Sequential
    }

    pub fn sequential() -> Self {
        Executor::Sequential
    }

    pub fn workers(&self) -> usize {
        match self {
            Executor::Sequential => 1,
            #[cfg(feature = "parallel")]
            Executor::Pool(p) => p.current_num_threads(),
        }
    }

    /// Calls `f(n, out_block)` for every block of `out`, where blocks have
    /// length `n_t`.
    pub fn for_each_block<F>(&self, out: &mut [f64], n_t: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Send + Sync,
    {
        match self {
            Executor::Sequential => {
                for (n, chunk) in out.chunks_exact_mut(n_t).enumerate() {
                    f(n, chunk);
                }
            }
            #[cfg(feature = "parallel")]
            Executor::Pool(pool) => {
                use rayon::prelude::*;
                pool.install(|| {
                    out.par_chunks_exact_mut(n_t)
                        .with_min_len(MIN_CHUNK_BLOCKS)
                        .enumerate()
                        .for_each(|(n, chunk)| f(n, chunk));
                });
            }
        }
    }

    /// Maps `f` over `0..len` and collects the results in index order.
    pub fn map_collect<T, F>(&self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Send + Sync,
    {
        match self {
            Executor::Sequential => (0..len).map(f).collect(),
            #[cfg(feature = "parallel")]
            Executor::Pool(pool) => {
                use rayon::prelude::*;
                pool.install(|| (0..len).into_par_iter().map(f).collect())
            }
        }
    }
}

/// Number of hardware threads visible to this process.
pub fn available_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
