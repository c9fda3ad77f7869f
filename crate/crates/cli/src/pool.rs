use rayon::prelude::*;
use synctrl_core::parallel::Parallelism;

use crate::error::CliError;

/// A bounded rayon pool. Results come back in input order.
pub struct Pool(rayon::ThreadPool);

impl Pool {
    /// `jobs = None` uses one worker per core.
    pub fn new(jobs: Option<usize>) -> Result<Self, CliError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(j) = jobs {
            if j == 0 {
                return Err(CliError::Config("--jobs must be at least 1".into()));
            }
            b = b.num_threads(j);
        }
        b.build().map(Pool).map_err(|e| CliError::Run(e.to_string()))
    }
}

impl Parallelism for Pool {
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        self.0.install(|| items.par_iter().map(f).collect())
    }
}
