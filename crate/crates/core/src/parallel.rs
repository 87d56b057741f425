//! Data-parallel map over independent work units.
//!
//! Every Monte Carlo and enumeration loop in the crate funnels through
//! [`map_indexed`]. Results always come back in index order, so any reduction
//! performed on the returned vector is independent of the worker count.
//! Without the `parallel` feature, [`Exec::Parallel`] silently runs
//! sequentially.

/// Execution strategy for a batch of independent work units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when this strategy actually fans out to worker threads in the
    /// current build.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Evaluate `f(0), …, f(n-1)` and return the results in index order.
pub fn map_indexed<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec == Exec::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Number of worker threads the parallel strategy would use right now.
pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
