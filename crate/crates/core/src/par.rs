//! Optional data parallelism.
//!
//! Batch work (candidate searches, pair audits, oracle sweeps) goes through
//! these helpers so the same call site runs on rayon or sequentially. Without
//! the `parallel` feature, [`Execution::Parallel`] silently degrades to the
//! sequential path. Results are always returned in input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How batch work is scheduled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be spread over the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `f` over every item, results in input order.
pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// First `Some` in input order.
pub fn find_map_first<T, R, F>(exec: Execution, items: &[T], f: F) -> Option<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Option<R> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().find_map_first(f);
    }
    let _ = exec;
    items.iter().find_map(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree() {
        let xs: Vec<u32> = (0..1000).collect();
        let seq = map(Execution::Sequential, &xs, |x| x * 3);
        let par = map(Execution::Parallel, &xs, |x| x * 3);
        assert_eq!(seq, par);

        let first = |x: &u32| (x % 97 == 96).then_some(*x);
        assert_eq!(find_map_first(Execution::Sequential, &xs, first), Some(96));
        assert_eq!(find_map_first(Execution::Parallel, &xs, first), Some(96));
    }
}
