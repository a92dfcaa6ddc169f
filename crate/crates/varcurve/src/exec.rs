//! Execution helpers that run batch work on rayon when the `parallel`
//! feature is enabled and fall back to plain loops otherwise.
//!
//! Every helper is written so that both modes produce bit-identical
//! results: maps preserve index order, reductions use a fixed chunk
//! layout with compensated summation inside each chunk and combine the
//! ordered partial sums sequentially. Thread scheduling can therefore
//! never leak into numeric output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::numeric::neumaier_sum;

/// Chunk length for deterministic sum reductions.
const SUM_CHUNK: usize = 1024;

/// Maps `f` over `0..n`, preserving index order.
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
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

/// Maps a fallible `f` over `0..n`. On failure returns the error with
/// the smallest index, so the reported failure does not depend on
/// scheduling.
pub(crate) fn try_map_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, (usize, E)>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    let results = map_indexed(n, f);
    let mut out = Vec::with_capacity(n);
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => out.push(v),
            Err(e) => return Err((i, e)),
        }
    }
    Ok(out)
}

/// Sum of `f(i)` over `0..n` with a fixed deterministic reduction tree.
pub(crate) fn sum_indexed<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(SUM_CHUNK);
    let partial = |c: usize| {
        let lo = c * SUM_CHUNK;
        let hi = (lo + SUM_CHUNK).min(n);
        neumaier_sum((lo..hi).map(&f))
    };
    #[cfg(feature = "parallel")]
    let partials: Vec<f64> = (0..chunks).into_par_iter().map(partial).collect();
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<f64> = (0..chunks).map(partial).collect();
    neumaier_sum(partials)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let v = map_indexed(1000, |i| 2 * i);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }

    #[test]
    fn try_map_reports_smallest_failing_index() {
        let r: Result<Vec<usize>, (usize, &str)> =
            try_map_indexed(100, |i| if i % 7 == 3 { Err("bad") } else { Ok(i) });
        assert_eq!(r.unwrap_err().0, 3);
    }

    #[test]
    fn sum_matches_sequential_reference() {
        let n = 10_000;
        let f = |i: usize| ((i as f64) * 0.7).sin() / (i as f64 + 1.0);
        let got = sum_indexed(n, f);
        let chunks: Vec<f64> = (0..n.div_ceil(SUM_CHUNK))
            .map(|c| {
                let lo = c * SUM_CHUNK;
                neumaier_sum((lo..(lo + SUM_CHUNK).min(n)).map(f))
            })
            .collect();
        assert_eq!(got, neumaier_sum(chunks));
    }
}
