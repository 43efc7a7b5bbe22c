//! Thin data-parallel layer.
//!
//! With the `parallel` feature the helpers dispatch to rayon; without it they
//! fall back to plain iterators. Every helper preserves input order in its
//! output, so callers get identical results either way.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Returns true when the crate was built with rayon support.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

/// Maps `f` over `range`, collecting results in index order.
pub fn map_range<T, F>(range: Range<u64>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        range.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        range.map(f).collect()
    }
}

/// Maps `f` over a slice, collecting results in slice order.
pub fn map_slice<S, T, F>(items: &[S], f: F) -> Vec<T>
where
    S: Sync,
    T: Send,
    F: Fn(&S) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Splits `range` into contiguous chunks of at most `chunk` indices, maps each
/// chunk with `f` and returns the chunk results in order.
pub fn map_chunks<T, F>(range: Range<u64>, chunk: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    let len = range.end.saturating_sub(range.start);
    let count = len.div_ceil(chunk);
    let start = range.start;
    let end = range.end;
    map_range(0..count, |c| {
        let lo = start + c * chunk;
        let hi = (lo + chunk).min(end);
        f(lo..hi)
    })
}
