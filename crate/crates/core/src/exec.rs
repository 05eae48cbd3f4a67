//! Sequential or data-parallel evaluation of independent work items.
//!
//! With the `parallel` feature (default) [`Exec::Parallel`] runs on the
//! rayon pool; without it every mode runs sequentially. Results always
//! come back in input order.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// Applies `f` to every item, preserving order.
pub fn map<T, U, F>(exec: Exec, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Caps the global worker pool at `threads` (0 = one per core).
///
/// Only the first call has an effect; a no-op without the `parallel`
/// feature.
pub fn configure_threads(threads: usize) -> Result<()> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(())
    }
}

/// Reads a worker cap from the environment variable `var`.
pub fn threads_from_env(var: &str) -> Result<Option<usize>> {
    match std::env::var(var) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::InvalidParameter(format!("{var}={v} is not a thread count"))),
        Err(_) => Ok(None),
    }
}
