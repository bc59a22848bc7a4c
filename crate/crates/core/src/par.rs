//! Switch between rayon and sequential iteration.
//!
//! Every helper here preserves input order in its output, so callers that
//! reduce the collected results sequentially get the same bits with or
//! without the `parallel` feature.

/// Evaluates the first expression when built with rayon, the second otherwise.
#[macro_export]
macro_rules! if_rayon {
    ($rayon_value: expr, $else_value: expr) => {{
        #[cfg(feature = "parallel")]
        {
            ($rayon_value)
        }
        #[cfg(not(feature = "parallel"))]
        {
            ($else_value)
        }
    }};
}

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Ordered map over a slice.
pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if_rayon!(
        items.par_iter().map(f).collect(),
        items.iter().map(f).collect()
    )
}

/// Ordered map over `0..n`.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    if_rayon!(
        (0..n).into_par_iter().map(f).collect(),
        (0..n).map(f).collect()
    )
}

/// Ordered map over fixed-size chunks of a slice. Chunk boundaries depend only
/// on `chunk_size`, never on the thread count.
pub fn map_chunks<T, R, F>(items: &[T], chunk_size: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&[T]) -> R + Sync + Send,
{
    let chunk_size = chunk_size.max(1);
    if_rayon!(
        items.par_chunks(chunk_size).map(f).collect(),
        items.chunks(chunk_size).map(f).collect()
    )
}

/// Name of the active execution backend, for logs and bench labels.
pub fn backend() -> &'static str {
    if_rayon!("rayon", "sequential")
}

/// Caps the global thread pool. A no-op without the `parallel` feature, and
/// when the pool has already been initialised.
pub fn set_thread_cap(threads: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
    }
}
