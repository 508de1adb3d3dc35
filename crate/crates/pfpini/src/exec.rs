use pfpini_core::Executor;
use rayon::prelude::*;

/// Rayon-backed [`Executor`] with its own pool.
pub struct Threaded {
    pool: rayon::ThreadPool,
}

impl Threaded {
    /// `None` uses rayon's default worker count.
    pub fn new(threads: Option<usize>) -> Result<Self, rayon::ThreadPoolBuildError> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n);
        }
        Ok(Threaded {
            pool: builder.build()?,
        })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Threaded {
    fn map<T, F>(&self, len: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool
            .install(|| (0..len).into_par_iter().map(job).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pfpini_core::{measure_exhaustive, GadgetSpec, Modulus, Sequential};

    #[test]
    fn results_keep_job_order() {
        let t = Threaded::new(Some(4)).unwrap();
        assert_eq!(t.threads(), 4);
        let v = t.map(1000, |i| i * 3);
        assert_eq!(v, (0..1000).map(|i| i * 3).collect::<Vec<_>>());
    }

    #[test]
    fn matches_sequential() {
        let g = GadgetSpec::barrett_algebraic(Modulus::new(257).unwrap(), None);
        let t = Threaded::new(Some(8)).unwrap();
        assert_eq!(measure_exhaustive(&g, &t), measure_exhaustive(&g, &Sequential));
    }
}
