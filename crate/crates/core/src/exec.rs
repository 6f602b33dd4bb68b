//! Index-ordered parallel map capability.
//!
//! Batch drivers hand an implementation of [`ParallelMap`] the number of jobs
//! and a closure of the job index; the output is always in index order, so
//! any aggregation downstream is independent of scheduling.

use alloc::vec::Vec;

use crate::error::{Error, Result};

pub trait ParallelMap: Sync {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl ParallelMap for Sequential {
    fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}

/// Maps fallible jobs; the error of the lowest failing index wins and is
/// tagged with that index.
pub fn try_map_indexed<P, T, F>(exec: &P, n: usize, f: F) -> Result<Vec<T>>
where
    P: ParallelMap + ?Sized,
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let results = exec.map_indexed(n, f);
    let mut out = Vec::with_capacity(n);
    for (i, r) in results.into_iter().enumerate() {
        out.push(r.map_err(|e: Error| e.at_sample(i))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_preserves_order() {
        assert_eq!(Sequential.map_indexed(5, |i| i * i), alloc::vec![0, 1, 4, 9, 16]);
    }

    #[test]
    fn first_error_is_tagged() {
        let r: Result<Vec<usize>> = try_map_indexed(&Sequential, 6, |i| {
            if i % 4 == 3 {
                Err(Error::InvalidArgument("boom".into()))
            } else {
                Ok(i)
            }
        });
        match r {
            Err(Error::Sample { index, .. }) => assert_eq!(index, 3),
            other => panic!("{other:?}"),
        }
    }
}
