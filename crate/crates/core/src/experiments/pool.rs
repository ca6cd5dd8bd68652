//! Runs independent `(n, seed)` cells, returning results in input order.

use crate::error::Result;

/// Sequential reference implementation.
pub fn map_sequential<T, R, F>(items: &[T], f: F) -> Result<Vec<R>>
where
    F: Fn(&T) -> Result<R>,
{
    items.iter().map(f).collect()
}

/// Rayon implementation; `jobs = 0` uses the global pool.
#[cfg(feature = "parallel")]
pub fn map_parallel<T, R, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    use rayon::prelude::*;
    if jobs == 0 {
        return items.par_iter().map(&f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| crate::error::Error::config("jobs", e.to_string()))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

/// Parallel when the `parallel` feature is on and `jobs != 1`.
pub fn map_cells<T, R, F>(items: &[T], jobs: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if jobs != 1 {
        return map_parallel(items, jobs, f);
    }
    let _ = jobs;
    map_sequential(items, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..100).collect();
        let seq = map_sequential(&items, |&i| Ok(i * i)).unwrap();
        for jobs in [0, 1, 3] {
            assert_eq!(map_cells(&items, jobs, |&i| Ok(i * i)).unwrap(), seq);
        }
    }

    #[test]
    fn errors_propagate() {
        let items = [1, 2, 3];
        let r = map_cells(&items, 0, |&i| if i == 2 { Err(Error::NonFinite(i)) } else { Ok(i) });
        assert!(r.is_err());
    }
}
