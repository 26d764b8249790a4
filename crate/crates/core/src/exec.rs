//! Index-parallel maps with a sequential fallback.
//!
//! Every data-parallel loop in the crate (per-incidence solves, per-row
//! completion, per-sampling-point indicators) goes through [`map_indices`].
//! Each item is computed independently and results are collected in index
//! order, so sequential and parallel runs are bit-identical.

/// How an index-parallel map is executed.
///
/// Without the `parallel` feature, `Parallel` silently runs sequentially.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when this build can actually run maps on a thread pool.
    pub fn is_parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

pub(crate) fn map_indices<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

pub(crate) fn try_map_indices<T, E, F>(exec: Execution, n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_indices(exec, n, f).into_iter().collect()
}
