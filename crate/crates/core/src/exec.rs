//! Worker pool used for data-parallel loops (environments, trees, islands).
//!
//! With the `parallel` feature off, or with one worker, every map runs
//! inline on the calling thread. Results are always returned in input order,
//! so the outcome never depends on the worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub struct Pool {
    workers: usize,
    #[cfg(feature = "parallel")]
    inner: Option<rayon::ThreadPool>,
}

impl std::fmt::Debug for Pool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pool").field("workers", &self.workers).finish()
    }
}

impl Default for Pool {
    fn default() -> Self {
        Pool::sequential()
    }
}

impl Pool {
    /// A pool with `workers` threads. Zero means one per available core.
    pub fn new(workers: usize) -> Self {
        let workers = if workers == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            workers
        };
        #[cfg(feature = "parallel")]
        {
            let inner = if workers > 1 {
                rayon::ThreadPoolBuilder::new().num_threads(workers).build().ok()
            } else {
                None
            };
            let workers = if inner.is_some() { workers } else { 1 };
            Pool { workers, inner }
        }
        #[cfg(not(feature = "parallel"))]
        {
            let _ = workers;
            Pool { workers: 1 }
        }
    }

    pub fn sequential() -> Self {
        Pool::new(1)
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn is_parallel(&self) -> bool {
        self.workers > 1
    }

    /// Maps `f` over `items`, preserving order.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.inner {
            if items.len() > 1 {
                if rayon::current_thread_index().is_some() {
                    return items.par_iter().map(&f).collect();
                }
                return pool.install(|| items.par_iter().map(&f).collect());
            }
        }
        items.iter().map(f).collect()
    }

    /// Maps `f` over `0..n`, preserving order.
    pub fn map_range<R, F>(&self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.inner {
            if n > 1 {
                if rayon::current_thread_index().is_some() {
                    return (0..n).into_par_iter().map(&f).collect();
                }
                return pool.install(|| (0..n).into_par_iter().map(&f).collect());
            }
        }
        (0..n).map(f).collect()
    }

    /// Applies `f` to every element in place.
    pub fn for_each_mut<T, F>(&self, items: &mut [T], f: F)
    where
        T: Send,
        F: Fn(usize, &mut T) + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.inner {
            if items.len() > 1 {
                let mut run = || items.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x));
                if rayon::current_thread_index().is_some() {
                    run();
                } else {
                    pool.install(run);
                }
                return;
            }
        }
        for (i, x) in items.iter_mut().enumerate() {
            f(i, x);
        }
    }
}
