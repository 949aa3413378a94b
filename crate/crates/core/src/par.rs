//! Index-ordered parallel map. Results come back in index order whatever
//! the worker count, and the first error by index wins.

use crate::error::Result;

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(workers: usize, len: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;

    if workers <= 1 || len <= 1 {
        return (0..len).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool");
    let results: Vec<Result<T>> = pool.install(|| (0..len).into_par_iter().map(&f).collect());
    results.into_iter().collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(_workers: usize, len: usize, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> Result<T>,
{
    (0..len).map(f).collect()
}
