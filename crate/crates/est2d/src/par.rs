//! Thin data-parallel shim. With the `parallel` feature the loops fan out via
//! rayon; without it they run sequentially. Results are collected in index
//! order and scattered by the caller, so outputs are bit-identical across
//! thread counts.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over `0..n`, returning results in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Maps `f` over a slice, returning results in element order.
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

/// Fold-then-reduce over `0..n` for associative, commutative reductions of
/// floating maxima/sums where order still matters for bitwise determinism:
/// the sequential fallback and the parallel path both reduce in index order
/// by chunking deterministically.
pub fn reduce_min<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    // min is order-insensitive, so a plain parallel reduce is deterministic.
    #[cfg(feature = "parallel")]
    {
        (0..n)
            .into_par_iter()
            .map(f)
            .reduce(|| f64::INFINITY, f64::min)
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).fold(f64::INFINITY, f64::min)
    }
}
