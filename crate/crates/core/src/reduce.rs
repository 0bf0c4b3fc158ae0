//! Order-fixed reductions. Parallel sums split into fixed-size blocks whose
//! partials are combined pairwise, so the result does not depend on the
//! number of worker threads.

use crate::scalar::Real;
use rayon::prelude::*;

const BLOCK: usize = 4096;

pub fn sum<T: Real>(xs: &[T]) -> T {
    sum_map(xs, |x| *x)
}

pub fn sum_map<T: Real, U: Sync>(xs: &[U], f: impl Fn(&U) -> T + Sync + Send) -> T {
    let partials: Vec<T> = xs
        .par_chunks(BLOCK)
        .map(|chunk| chunk.iter().fold(T::zero(), |acc, x| acc + f(x)))
        .collect();
    pairwise(&partials)
}

/// Deterministic sum of `f(i)` for i in 0..n.
pub fn sum_range<T: Real>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> T {
    let nb = n.div_ceil(BLOCK);
    let partials: Vec<T> = (0..nb)
        .into_par_iter()
        .map(|b| {
            let hi = ((b + 1) * BLOCK).min(n);
            (b * BLOCK..hi).fold(T::zero(), |acc, i| acc + f(i))
        })
        .collect();
    pairwise(&partials)
}

/// Deterministic elementwise sum of fixed-length vectors produced per index.
pub fn sum_range_vec(n: usize, width: usize, f: impl Fn(usize, &mut [f64]) + Sync + Send) -> Vec<f64> {
    let nb = n.div_ceil(BLOCK);
    let partials: Vec<Vec<f64>> = (0..nb)
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![0.0; width];
            let hi = ((b + 1) * BLOCK).min(n);
            for i in b * BLOCK..hi {
                f(i, &mut acc);
            }
            acc
        })
        .collect();
    let mut out = vec![0.0; width];
    for p in &partials {
        for (o, v) in out.iter_mut().zip(p) {
            *o += v;
        }
    }
    out
}

pub fn max_range(n: usize, f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
    (0..n).into_par_iter().map(f).reduce(|| 0.0, f64::max)
}

fn pairwise<T: Real>(xs: &[T]) -> T {
    match xs.len() {
        0 => T::zero(),
        1 => xs[0],
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise(a) + pairwise(b)
        }
    }
}
