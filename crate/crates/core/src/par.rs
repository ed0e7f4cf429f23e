//! Data-parallel helpers. With the `parallel` feature these run on rayon;
//! without it (or with [`Workers::Sequential`]) they fall back to plain
//! iterators. Results are always returned in input order.

/// Worker-pool selection for batch jobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Workers {
    /// Single thread, no pool.
    Sequential,
    /// Rayon's global pool.
    #[default]
    Auto,
    /// Dedicated pool with this many threads.
    Threads(usize),
}

impl Workers {
    /// `0` means [`Workers::Auto`], `1` means [`Workers::Sequential`].
    pub fn from_count(n: usize) -> Self {
        match n {
            0 => Workers::Auto,
            1 => Workers::Sequential,
            n => Workers::Threads(n),
        }
    }
}

/// Maps `f` over `items`, possibly in parallel, preserving order.
pub fn map<T, R, F>(items: &[T], workers: Workers, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        match workers {
            Workers::Sequential => items.iter().map(f).collect(),
            Workers::Auto => items.par_iter().map(f).collect(),
            Workers::Threads(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(|| items.par_iter().map(f).collect()),
                Err(_) => items.iter().map(f).collect(),
            },
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        items.iter().map(f).collect()
    }
}

/// Runs `f(row_index, row)` over consecutive `row_len`-sized chunks of `data`.
///
/// Uses whatever pool the caller is already running in, so nested use from
/// inside [`map`] does not oversubscribe.
pub(crate) fn for_each_row<F>(data: &mut [u8], row_len: usize, f: F)
where
    F: Fn(usize, &mut [u8]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        // Small rasters are cheaper on one thread.
        if data.len() >= 64 * 1024 {
            data.par_chunks_mut(row_len)
                .enumerate()
                .for_each(|(y, row)| f(y, row));
            return;
        }
    }
    for (y, row) in data.chunks_mut(row_len).enumerate() {
        f(y, row);
    }
}
