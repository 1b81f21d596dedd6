//! Execution strategy for the data-parallel loops.
//!
//! Every hot loop in the crate takes an [`Execution`] so the same code path can
//! run on one thread or on the rayon pool. Without the `parallel` feature the
//! parallel variant silently falls back to sequential iteration.

use num_complex::Complex64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Maps `f` over `0..n`, preserving order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(f).collect(),
            Execution::Parallel => par_map(n, f),
        }
    }

    /// Sums `f(i)` over `0..n` with a fixed pairwise reduction tree, so the
    /// result does not depend on the execution mode.
    pub fn sum<F>(self, n: usize, f: F) -> Complex64
    where
        F: Fn(usize) -> Complex64 + Sync + Send,
    {
        pairwise_sum(&self.map(n, f))
    }

    /// Real-valued counterpart of [`Execution::sum`].
    pub fn sum_real<F>(self, n: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        pairwise_sum_real(&self.map(n, f))
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

pub fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    match xs.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => xs[0],
        n => {
            let (l, r) = xs.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

pub fn pairwise_sum_real(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let (l, r) = xs.split_at(n / 2);
            pairwise_sum_real(l) + pairwise_sum_real(r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_bitwise() {
        let f = |i: usize| Complex64::new((i as f64).sin(), 1.0 / (1.0 + i as f64));
        let a = Execution::Sequential.sum(1000, f);
        let b = Execution::Parallel.sum(1000, f);
        assert_eq!(a, b);
    }

    #[test]
    fn map_keeps_order() {
        let v = Execution::Parallel.map(50, |i| i * i);
        assert!(v.iter().enumerate().all(|(i, &x)| x == i * i));
    }
}
