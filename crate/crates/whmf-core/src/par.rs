//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the `*_par` entry points fan work
//! out on rayon; without it they alias the sequential versions. Every
//! parallel path computes each output element by the same expression and in
//! the same per-element order as the sequential one, so results are
//! bit-identical either way.

/// Map `f` over `0..n`, collecting results in index order, sequentially.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync + Send,
    T: Send,
{
    (0..n).map(f).collect()
}

/// Map `f` over `0..n`, collecting results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed_par<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync + Send,
    T: Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed_par<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync + Send,
    T: Send,
{
    map_indexed_seq(n, f)
}

/// Work above this element count is worth shipping to rayon.
pub(crate) const PAR_THRESHOLD: usize = 64;

/// Map over `0..n`, parallel only when `n * weight` is large enough.
pub fn map_indexed_auto<T, F>(n: usize, weight: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T + Sync + Send,
    T: Send,
{
    if n.saturating_mul(weight) >= PAR_THRESHOLD * 64 {
        map_indexed_par(n, f)
    } else {
        map_indexed_seq(n, f)
    }
}

/// Map `f` over a slice, in index order.
pub fn map_slice_par<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    map_indexed_par(items.len(), |i| f(&items[i]))
}

/// Sequential twin of [`map_slice_par`], kept callable under every feature
/// set so benchmarks can compare both paths in one build.
pub fn map_slice_seq<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    map_indexed_seq(items.len(), |i| f(&items[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn par_and_seq_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = map_slice_par(&xs, |x| x * x + 1);
        let b = map_slice_seq(&xs, |x| x * x + 1);
        assert_eq!(a, b);
    }
}
