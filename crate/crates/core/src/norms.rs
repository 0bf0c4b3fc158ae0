//! Weighted Lebesgue norms by midpoint quadrature and Sobolev norms by Parseval.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::GridSpec;
use crate::reduce;
use crate::scalar::Real;
use crate::spectral::{Fft3, SpectralField};
use serde::Serialize;

/// Exponent of a Lebesgue norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn p(p: f64) -> Self {
        if p.is_infinite() {
            Exponent::Infinity
        } else {
            Exponent::Finite(p)
        }
    }
}

/// All multi-indices with |α| = m, in lexicographic order.
pub fn multi_indices(m: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in (0..=m).rev() {
        for b in (0..=m - a).rev() {
            out.push([a, b, m - a - b]);
        }
    }
    out
}

/// Number of ordered index tuples collapsing to α: m!/(α₁!α₂!α₃!).
pub fn multinomial(alpha: [usize; 3]) -> f64 {
    let f = |n: usize| (1..=n).map(|v| v as f64).product::<f64>();
    f(alpha.iter().sum()) / (f(alpha[0]) * f(alpha[1]) * f(alpha[2]))
}

/// (Σ_i |x_i|^{ap} |f_i|^p h³)^{1/p} over the grid nodes, with |f| the
/// Euclidean norm across the given components. The weight uses the distance
/// to the origin inside the fundamental domain, with no periodic wrap.
pub fn weighted_norm<T: Real>(grid: &GridSpec, comps: &[&[T]], a: f64, p: Exponent) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(Error::input(format!("weight exponent must be nonnegative, got {a}")));
    }
    if let Exponent::Finite(p) = p {
        if !(p >= 1.0) {
            return Err(Error::input(format!("Lebesgue exponent must be >= 1, got {p}")));
        }
    }
    let mag = |q: usize| -> f64 {
        comps.iter().map(|c| c[q].to_f64_lossy().powi(2)).sum::<f64>().sqrt()
    };
    let radius = |q: usize| {
        let (i, j, k) = grid.unravel(q);
        let x = grid.point(i, j, k);
        (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
    };
    let weight = |q: usize| if a == 0.0 { 1.0 } else { radius(q).powf(a) };
    Ok(match p {
        Exponent::Infinity => reduce::max_range(grid.len(), |q| weight(q) * mag(q)),
        Exponent::Finite(p) => {
            let s: f64 = reduce::sum_range(grid.len(), |q| (weight(q) * mag(q)).powf(p));
            (s * grid.cell_volume()).powf(1.0 / p)
        }
    })
}

pub fn weighted_norm_scalar<T: Real>(f: &ScalarField<T>, a: f64, p: Exponent) -> Result<f64> {
    weighted_norm(&f.grid, &[&f.data], a, p)
}

pub fn weighted_norm_vector<T: Real>(u: &VectorField<T>, a: f64, p: Exponent) -> Result<f64> {
    weighted_norm(&u.grid, &[&u.comps[0], &u.comps[1], &u.comps[2]], a, p)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SobolevRow {
    pub k: usize,
    pub h: f64,
    pub w_inf: f64,
}

/// ‖u‖_{H^k} = (Σ_{|α|≤k} ‖D^α u‖²)^{1/2} and ‖u‖_{W^{k,∞}} = max_{|α|≤k} sup|D^α u|.
pub fn sobolev_norms<T: Real>(fft: &Fft3<T>, u: &[SpectralField<T>; 3], k_max: usize) -> Result<Vec<SobolevRow>> {
    if k_max > 5 {
        return Err(Error::input(format!("sobolev order {k_max} exceeds 5")));
    }
    let g = u[0].grid;
    let mut rows = Vec::with_capacity(k_max + 1);
    let mut h2 = 0.0;
    let mut w = 0.0f64;
    for m in 0..=k_max {
        for alpha in multi_indices(m) {
            let d: Vec<SpectralField<T>> =
                u.iter().map(|c| c.derivative(alpha)).collect::<Result<_>>()?;
            h2 += d.iter().map(|s| s.energy().to_f64_lossy()).sum::<f64>();
            let phys: Vec<Vec<T>> = d.iter().map(|s| fft.inverse(s)).collect();
            let sup = reduce::max_range(g.len(), |q| {
                phys.iter().map(|c| c[q].to_f64_lossy().powi(2)).sum::<f64>().sqrt()
            });
            w = w.max(sup);
        }
        rows.push(SobolevRow { k: m, h: h2.sqrt(), w_inf: w });
    }
    Ok(rows)
}

/// |D^l f|² summed over all ordered l-tuples of axes, as a grid field.
pub fn full_derivative_density<T: Real>(fft: &Fft3<T>, f: &[SpectralField<T>], l: usize) -> Result<Vec<f64>> {
    let g = f[0].grid;
    let mut acc = vec![0.0; g.len()];
    for alpha in multi_indices(l) {
        let w = multinomial(alpha);
        for c in f {
            let d = fft.inverse(&c.derivative(alpha)?);
            for (a, v) in acc.iter_mut().zip(&d) {
                *a += w * v.to_f64_lossy().powi(2);
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_counts() {
        for m in 0..6 {
            assert_eq!(multi_indices(m).len(), (m + 1) * (m + 2) / 2);
            let total: f64 = multi_indices(m).into_iter().map(multinomial).sum();
            assert_eq!(total, 3f64.powi(m as i32));
        }
    }
}
