//! Execution policy for the data-parallel loops (pairwise models, folds,
//! trees, clients, batch prediction).
//!
//! Every parallel map returns results in input order, so outputs are identical
//! whatever the thread count. Without the `parallel` feature every policy runs
//! sequentially.

/// How independent work items are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// `jobs == 0` uses the ambient rayon pool.
    Parallel {
        jobs: usize,
    },
    #[default]
    Auto,
}

impl Exec {
    pub fn from_jobs(jobs: Option<usize>) -> Self {
        match jobs {
            Some(1) => Exec::Sequential,
            Some(n) => Exec::Parallel { jobs: n },
            None => Exec::Auto,
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && !matches!(self, Exec::Sequential)
    }

    /// Map `f` over `0..n`, collecting results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        if !self.is_parallel() || n <= 1 {
            return (0..n).map(f).collect();
        }
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            let run = || (0..n).into_par_iter().map(&f).collect::<Vec<T>>();
            match self {
                Exec::Parallel { jobs } if jobs > 0 && rayon::current_thread_index().is_none() => {
                    match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
                        Ok(pool) => pool.install(run),
                        Err(e) => {
                            log::warn!("thread pool with {jobs} threads unavailable ({e}); using the global pool");
                            run()
                        }
                    }
                }
                _ => run(),
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            (0..n).map(f).collect()
        }
    }

    /// Fallible variant of [`Exec::map`]; the first error in index order wins.
    pub fn try_map<T, E, F>(self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order_for_every_policy() {
        let expected: Vec<usize> = (0..257).map(|i| i * i).collect();
        for exec in [Exec::Sequential, Exec::Auto, Exec::Parallel { jobs: 3 }, Exec::Parallel { jobs: 0 }] {
            assert_eq!(exec.map(257, |i| i * i), expected, "{exec:?}");
        }
    }

    #[test]
    fn try_map_reports_first_error() {
        let r: Result<Vec<usize>, usize> =
            Exec::Parallel { jobs: 4 }.try_map(100, |i| if i % 30 == 29 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(29));
    }

    #[test]
    fn jobs_mapping() {
        assert_eq!(Exec::from_jobs(Some(1)), Exec::Sequential);
        assert_eq!(Exec::from_jobs(Some(4)), Exec::Parallel { jobs: 4 });
        assert_eq!(Exec::from_jobs(None), Exec::Auto);
    }
}
