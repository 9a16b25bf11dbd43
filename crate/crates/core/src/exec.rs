//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] dispatches
//! through rayon; without it every path runs sequentially. Both paths perform
//! identical per-element arithmetic, so results are bit-identical.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length below which splitting work across threads is not worth it.
#[cfg(feature = "parallel")]
const MIN_PAR_LEN: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run in parallel.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Fill `out[i] = f(i).0` and return the maximum of `f(i).1`.
pub(crate) fn fill_max<F>(exec: Execution, out: &mut [f64], f: F) -> f64
where
    F: Fn(usize) -> (f64, f64) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && out.len() >= MIN_PAR_LEN {
        return out
            .par_iter_mut()
            .with_min_len(MIN_PAR_LEN / 2)
            .enumerate()
            .map(|(i, o)| {
                let (v, m) = f(i);
                *o = v;
                m
            })
            .reduce(|| f64::NEG_INFINITY, f64::max);
    }
    let _ = exec;
    let mut acc = f64::NEG_INFINITY;
    for (i, o) in out.iter_mut().enumerate() {
        let (v, m) = f(i);
        *o = v;
        acc = acc.max(m);
    }
    acc
}

/// Maximum of `f(i)` over `0..len`.
pub(crate) fn max_over<F>(exec: Execution, len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() && len >= MIN_PAR_LEN {
        return (0..len)
            .into_par_iter()
            .with_min_len(MIN_PAR_LEN / 2)
            .map(f)
            .reduce(|| f64::NEG_INFINITY, f64::max);
    }
    let _ = exec;
    (0..len).map(f).fold(f64::NEG_INFINITY, f64::max)
}

/// Map over a slice of independent jobs, keeping input order.
pub(crate) fn map_jobs<T, R, F>(exec: Execution, jobs: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return jobs.par_iter().map(f).collect();
    }
    let _ = exec;
    jobs.iter().map(f).collect()
}
