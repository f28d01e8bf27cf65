//! Ordered fan-out of independent grid points.
//!
//! Results are always gathered by index, so serial and parallel execution
//! return identical vectors. Without the `parallel` feature,
//! [`ExecMode::Parallel`] runs serially.

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExecMode {
    Serial,
    #[default]
    Parallel,
}

pub fn try_map<I, T, F>(mode: ExecMode, items: &[I], f: F) -> Result<Vec<T>>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> Result<T> + Sync + Send,
{
    match mode {
        ExecMode::Serial => items.iter().map(&f).collect(),
        #[cfg(feature = "parallel")]
        ExecMode::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(&f).collect()
        }
        #[cfg(not(feature = "parallel"))]
        ExecMode::Parallel => items.iter().map(&f).collect(),
    }
}

/// Runs `op` with parallel work capped at `jobs` threads.
#[cfg(feature = "parallel")]
pub fn with_jobs<R: Send>(jobs: usize, op: impl FnOnce() -> R + Send) -> R {
    match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(op),
        Err(e) => {
            log::warn!("could not build a {jobs}-thread pool ({e}); using the global pool");
            op()
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_jobs<R: Send>(_jobs: usize, op: impl FnOnce() -> R + Send) -> R {
    op()
}
