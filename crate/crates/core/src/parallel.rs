//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the [`Parallelism::Parallel`]
//! strategy dispatches to rayon. Without it, every strategy runs on the
//! calling thread, so results are identical either way: all reductions
//! here preserve input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How independent work items are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    /// Use the rayon pool; `workers = Some(n)` builds a dedicated pool of
    /// `n` threads.
    #[default]
    Parallel,
    ParallelWith { workers: usize },
}

impl Parallelism {
    pub fn with_workers(workers: Option<usize>) -> Self {
        match workers {
            Some(1) => Parallelism::Sequential,
            Some(n) if n > 1 => Parallelism::ParallelWith { workers: n },
            _ => Parallelism::Parallel,
        }
    }

    /// Maps `f` over `items`, returning results in input order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Parallelism::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Parallelism::Parallel => items.par_iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Parallelism::ParallelWith { workers } => {
                match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
                    Ok(pool) => pool.install(|| items.par_iter().map(&f).collect()),
                    Err(_) => items.par_iter().map(f).collect(),
                }
            }
            #[cfg(not(feature = "parallel"))]
            _ => items.iter().map(f).collect(),
        }
    }

    /// Maps `f` over `0..n`, in order.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        let idx: Vec<usize> = (0..n).collect();
        self.map(&idx, |&i| f(i))
    }
}

pub fn available_workers() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree_and_keep_order() {
        let xs: Vec<u64> = (0..257).collect();
        let seq = Parallelism::Sequential.map(&xs, |x| x * x + 1);
        let par = Parallelism::Parallel.map(&xs, |x| x * x + 1);
        let pool = Parallelism::ParallelWith { workers: 3 }.map(&xs, |x| x * x + 1);
        assert_eq!(seq, par);
        assert_eq!(seq, pool);
        assert_eq!(seq[10], 101);
    }

    #[test]
    fn worker_counts() {
        assert_eq!(Parallelism::with_workers(Some(1)), Parallelism::Sequential);
        assert_eq!(Parallelism::with_workers(None), Parallelism::Parallel);
        assert_eq!(
            Parallelism::with_workers(Some(4)),
            Parallelism::ParallelWith { workers: 4 }
        );
    }
}
