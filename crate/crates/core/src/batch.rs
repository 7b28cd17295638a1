//! Running many independent executions. Results always come back in input
//! order, whatever order the work finished in.

/// Applies `f` to every item sequentially.
pub fn run_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Applies `f` to every item on the global rayon pool.
#[cfg(feature = "parallel")]
pub fn run_parallel<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// Sequential fallback when the `parallel` feature is off.
#[cfg(not(feature = "parallel"))]
pub fn run_parallel<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    run_sequential(items, f)
}

/// Applies `f` using at most `jobs` worker threads; `jobs <= 1` runs on the
/// calling thread.
pub fn run_with_jobs<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if jobs <= 1 {
        return run_sequential(items, f);
    }
    #[cfg(feature = "parallel")]
    {
        match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
            Ok(pool) => pool.install(|| run_parallel(items, f)),
            Err(_) => run_sequential(items, f),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_sequential(items, f)
    }
}
