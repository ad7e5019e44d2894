//! Worker selection for data-parallel sweeps.
//!
//! With the `parallel` feature (default) independent work items run on a
//! rayon pool; without it every request falls back to a sequential loop.
//! Callers always receive results in input order, so output never depends on
//! the worker count.

/// How many threads a sweep may use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Workers {
    Sequential,
    /// A dedicated pool of the given size; 0 uses rayon's global pool.
    Threads(usize),
    /// Rayon's global pool when available.
    #[default]
    Auto,
}

impl Workers {
    /// `1` means sequential, `0` means automatic.
    pub fn from_count(count: usize) -> Self {
        match count {
            0 => Workers::Auto,
            1 => Workers::Sequential,
            n => Workers::Threads(n),
        }
    }

    pub fn is_sequential(self) -> bool {
        !cfg!(feature = "parallel") || self == Workers::Sequential
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map_ordered<T, R, F>(workers: Workers, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        match workers {
            Workers::Sequential => items.into_iter().map(f).collect(),
            Workers::Auto | Workers::Threads(0) => items.into_par_iter().map(f).collect(),
            Workers::Threads(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(|| items.into_par_iter().map(&f).collect()),
                Err(_) => items.into_iter().map(f).collect(),
            },
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        items.into_iter().map(f).collect()
    }
}
