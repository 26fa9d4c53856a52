//! Data-parallel helpers.
//!
//! With the `parallel` feature (on by default) the default entry points fan
//! out over rayon's global pool; without it they run on the calling thread.
//! Both paths compute every element with the same arithmetic in the same
//! order, so results are bitwise identical and the output order always
//! follows the input order.

/// Maps `f` over `items`, preserving order.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        parallel::map(items, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        sequential::map(items, f)
    }
}

/// Calls `f(row_index, row)` for each `row_len`-sized chunk of `data`.
pub fn for_each_row<F>(data: &mut [f64], row_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        parallel::for_each_row(data, row_len, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        sequential::for_each_row(data, row_len, f)
    }
}

pub mod sequential {
    pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
    where
        F: Fn(&T) -> R,
    {
        items.iter().map(f).collect()
    }

    pub fn for_each_row<F>(data: &mut [f64], row_len: usize, f: F)
    where
        F: Fn(usize, &mut [f64]),
    {
        if row_len == 0 {
            return;
        }
        for (i, row) in data.chunks_mut(row_len).enumerate() {
            f(i, row);
        }
    }
}

#[cfg(feature = "parallel")]
pub mod parallel {
    use rayon::prelude::*;

    pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        items.par_iter().map(f).collect()
    }

    pub fn for_each_row<F>(data: &mut [f64], row_len: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        if row_len == 0 {
            return;
        }
        data.par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }
}
