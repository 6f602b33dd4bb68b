use brownloop_core::exec::ParallelMap;
use rayon::prelude::*;

use crate::error::{CliError, CliResult};

/// Rayon-backed [`ParallelMap`] with its own pool. Results come back in
/// index order, so the worker count never changes an output.
pub struct RayonExec {
    pool: rayon::ThreadPool,
}

impl RayonExec {
    pub fn new(workers: usize) -> CliResult<Self> {
        if workers == 0 {
            return Err(CliError::usage("workers must be positive"));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::usage(format!("cannot start worker pool: {e}")))?;
        Ok(RayonExec { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl ParallelMap for RayonExec {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_kept() {
        let ex = RayonExec::new(3).unwrap();
        assert_eq!(ex.map_indexed(100, |i| i * 2), (0..100).map(|i| i * 2).collect::<Vec<_>>());
        assert!(RayonExec::new(0).is_err());
    }
}
