//! Order-preserving map over independent work items. With the `parallel`
//! feature the items run on a rayon pool; otherwise, or with `jobs == 1`,
//! they run in order on the calling thread.

/// `jobs == 0` uses every available core.
pub fn map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if jobs != 1 && items.len() > 1 {
            use rayon::prelude::*;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build();
            if let Ok(pool) = pool {
                return pool.install(|| items.par_iter().map(&f).collect());
            }
            log::warn!("could not build a thread pool; running sequentially");
        }
    }
    let _ = jobs;
    items.iter().map(f).collect()
}

pub fn is_parallel_build() -> bool {
    cfg!(feature = "parallel")
}
