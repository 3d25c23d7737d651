//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature (default) the closure runs on the rayon pool;
//! without it the same code compiles to a plain sequential loop. Results come
//! back in index order either way, so callers that reduce in order are
//! deterministic under both builds.

#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}
