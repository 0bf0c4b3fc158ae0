//! Fourier representation on the periodic box.
//!
//! Coefficients are stored so that f(x) = Σ_k c_k exp(2πi k·x / L) with `x` the
//! physical coordinate, i.e. relative to the box centre rather than the first
//! node. The forward transform therefore carries a (−1)^(k1+k2+k3) phase and
//! the 1/n³ normalisation.

use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::GridSpec;
use crate::scalar::Real;
use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub type C<T> = Complex<T>;

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField<T> {
    pub grid: GridSpec,
    pub data: Vec<C<T>>,
}

/// Forward and inverse 3-D transforms for one grid.
pub struct Fft3<T: Real> {
    grid: GridSpec,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> Fft3<T> {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Fft3 { grid, fwd: planner.plan_fft_forward(grid.n), inv: planner.plan_fft_inverse(grid.n) }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    fn run(&self, data: &mut [C<T>], plan: &Arc<dyn Fft<T>>) {
        let n = self.grid.n;
        let plane = n * n;
        // x lines are contiguous
        data.par_chunks_mut(plane).for_each(|p| {
            let mut scratch = vec![C::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
            plan.process_with_scratch(p, &mut scratch);
        });
        // y lines: transpose each z-plane
        data.par_chunks_mut(plane).for_each(|p| {
            let mut buf = vec![C::new(T::zero(), T::zero()); plane];
            let mut scratch = vec![C::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
            for j in 0..n {
                for i in 0..n {
                    buf[j + n * i] = p[i + n * j];
                }
            }
            plan.process_with_scratch(&mut buf, &mut scratch);
            for j in 0..n {
                for i in 0..n {
                    p[i + n * j] = buf[j + n * i];
                }
            }
        });
        // z lines: swap x and z globally
        let mut t = transpose_xz(data, n);
        t.par_chunks_mut(plane).for_each(|p| {
            let mut scratch = vec![C::new(T::zero(), T::zero()); plan.get_inplace_scratch_len()];
            plan.process_with_scratch(p, &mut scratch);
        });
        let back = transpose_xz(&t, n);
        data.copy_from_slice(&back);
    }

    fn phase(&self, p: usize) -> bool {
        let (i, j, k) = self.grid.unravel(p);
        let s = self.grid.wavenumber(i) + self.grid.wavenumber(j) + self.grid.wavenumber(k);
        s.rem_euclid(2) == 1
    }

    pub fn forward_complex(&self, mut data: Vec<C<T>>) -> SpectralField<T> {
        self.run(&mut data, &self.fwd);
        let norm = T::one() / T::lit(self.grid.len() as f64);
        data.par_iter_mut().enumerate().for_each(|(p, c)| {
            *c = if self.phase(p) { -*c * norm } else { *c * norm };
        });
        SpectralField { grid: self.grid, data }
    }

    pub fn forward(&self, f: &[T]) -> SpectralField<T> {
        let data = f.iter().map(|&v| C::new(v, T::zero())).collect();
        self.forward_complex(data)
    }

    pub fn forward_scalar(&self, f: &ScalarField<T>) -> SpectralField<T> {
        self.forward(&f.data)
    }

    pub fn forward_vector(&self, u: &VectorField<T>) -> [SpectralField<T>; 3] {
        std::array::from_fn(|c| self.forward(&u.comps[c]))
    }

    pub fn inverse_complex(&self, s: &SpectralField<T>) -> Vec<C<T>> {
        debug_assert_eq!(s.grid, self.grid);
        let mut data: Vec<C<T>> = s
            .data
            .par_iter()
            .enumerate()
            .map(|(p, &c)| if self.phase(p) { -c } else { c })
            .collect();
        self.run(&mut data, &self.inv);
        data
    }

    /// Real part of the inverse transform.
    pub fn inverse(&self, s: &SpectralField<T>) -> Vec<T> {
        self.inverse_complex(s).into_iter().map(|c| c.re).collect()
    }

    pub fn inverse_scalar(&self, s: &SpectralField<T>) -> ScalarField<T> {
        ScalarField { grid: self.grid, data: self.inverse(s) }
    }

    pub fn inverse_vector(&self, s: &[SpectralField<T>; 3], time: f64) -> VectorField<T> {
        VectorField { grid: self.grid, comps: std::array::from_fn(|c| self.inverse(&s[c])), time }
    }
}

fn transpose_xz<T: Real>(data: &[C<T>], n: usize) -> Vec<C<T>> {
    let mut out = vec![C::new(T::zero(), T::zero()); data.len()];
    out.par_chunks_mut(n * n).enumerate().for_each(|(i, slab)| {
        // slab holds fixed original x = i, indexed by (k, j) with k fastest
        for j in 0..n {
            for k in 0..n {
                slab[k + n * j] = data[i + n * (j + n * k)];
            }
        }
    });
    out
}

/// Largest order accepted by [`SpectralField::derivative`].
pub const MAX_DERIVATIVE_ORDER: usize = 6;

impl<T: Real> SpectralField<T> {
    pub fn zeros(grid: GridSpec) -> Self {
        SpectralField { grid, data: vec![C::new(T::zero(), T::zero()); grid.len()] }
    }

    /// Applies `m(i, j, k)` mode by mode, where `i, j, k` are storage slots.
    pub fn multiply(&self, m: impl Fn(usize, usize, usize) -> C<T> + Sync) -> Self {
        let g = self.grid;
        let data = self
            .data
            .par_iter()
            .enumerate()
            .map(|(p, &c)| {
                let (i, j, k) = g.unravel(p);
                c * m(i, j, k)
            })
            .collect();
        SpectralField { grid: g, data }
    }

    /// D^α via (2πi k / L)^α. Odd-order factors vanish on Nyquist planes so
    /// the output stays real.
    pub fn derivative(&self, alpha: [usize; 3]) -> Result<Self> {
        let order: usize = alpha.iter().sum();
        if order > MAX_DERIVATIVE_ORDER {
            return Err(Error::input(format!("derivative order {order} exceeds {MAX_DERIVATIVE_ORDER}")));
        }
        let g = self.grid;
        let table: Vec<[C<T>; 3]> = (0..g.n)
            .map(|i| std::array::from_fn(|ax| axis_factor::<T>(&g, i, alpha[ax])))
            .collect();
        Ok(self.multiply(|i, j, k| table[i][0] * table[j][1] * table[k][2]))
    }

    pub fn d(&self, axis: usize) -> Self {
        let mut a = [0; 3];
        a[axis] = 1;
        self.derivative(a).expect("first order")
    }

    pub fn laplacian(&self) -> Self {
        let g = self.grid;
        self.multiply(|i, j, k| {
            let k2 = g.kappa(i).powi(2) + g.kappa(j).powi(2) + g.kappa(k).powi(2);
            C::new(T::lit(-k2), T::zero())
        })
    }

    /// Riesz transform with multiplier −i ξ_j/|ξ|, zero at ξ = 0.
    pub fn riesz(&self, axis: usize) -> Self {
        let g = self.grid;
        self.multiply(|i, j, k| {
            let idx = [i, j, k];
            if g.is_nyquist(idx[axis]) {
                return C::new(T::zero(), T::zero());
            }
            let kv = [g.kappa(i), g.kappa(j), g.kappa(k)];
            let norm = (kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2]).sqrt();
            if norm == 0.0 {
                C::new(T::zero(), T::zero())
            } else {
                C::new(T::zero(), T::lit(-kv[axis] / norm))
            }
        })
    }

    pub fn mean(&self) -> T {
        self.data[0].re
    }

    pub fn scaled(&self, s: T) -> Self {
        SpectralField { grid: self.grid, data: self.data.iter().map(|&c| c * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        SpectralField {
            grid: self.grid,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect(),
        }
    }

    /// ∫|f|² over the box by Parseval.
    pub fn energy(&self) -> T {
        crate::reduce::sum_map(&self.data, |c| c.norm_sqr()) * T::lit(self.grid.l.powi(3))
    }

    /// Zeroes every mode with 3|k_j| ≥ n on some axis (two-thirds rule).
    pub fn dealias(&self) -> Self {
        let mask = DealiasMask::new(self.grid);
        self.multiply(|i, j, k| {
            if mask.keep(i, j, k) {
                C::new(T::one(), T::zero())
            } else {
                C::new(T::zero(), T::zero())
            }
        })
    }

    /// Largest |k_j| with a coefficient above `tol` in magnitude.
    pub fn band(&self, tol: T) -> usize {
        let g = self.grid;
        let mut b = 0usize;
        for (p, c) in self.data.iter().enumerate() {
            if c.norm() > tol {
                let (i, j, k) = g.unravel(p);
                for s in [i, j, k] {
                    b = b.max(g.wavenumber(s).unsigned_abs() as usize);
                }
            }
        }
        b
    }

    /// Same function on a grid with the same box and `n_new` nodes per axis.
    /// Upsampling splits Nyquist coefficients evenly between ±n/2; downsampling
    /// drops every mode the target grid cannot hold.
    pub fn resample(&self, n_new: usize) -> Result<Self> {
        let src = self.grid;
        let dst = GridSpec::new(n_new, src.l)?;
        let mut out = SpectralField::zeros(dst);
        let targets = |i: usize| -> Vec<(usize, f64)> {
            let k = src.wavenumber(i);
            let slot = |k: i64| -> Option<usize> {
                let h = (n_new / 2) as i64;
                if k < -h || k >= h {
                    None
                } else {
                    Some(k.rem_euclid(n_new as i64) as usize)
                }
            };
            if src.is_nyquist(i) && n_new > src.n {
                let h = (src.n / 2) as i64;
                vec![(slot(-h).unwrap(), 0.5), (slot(h).unwrap(), 0.5)]
            } else if src.is_nyquist(i) && n_new < src.n {
                vec![]
            } else {
                slot(k).map(|s| vec![(s, 1.0)]).unwrap_or_default()
            }
        };
        let t: Vec<Vec<(usize, f64)>> = (0..src.n).map(targets).collect();
        for (p, &c) in self.data.iter().enumerate() {
            if c.re == T::zero() && c.im == T::zero() {
                continue;
            }
            let (i, j, k) = src.unravel(p);
            for &(a, wa) in &t[i] {
                for &(b, wb) in &t[j] {
                    for &(e, we) in &t[k] {
                        out.data[dst.idx(a, b, e)] = out.data[dst.idx(a, b, e)] + c * T::lit(wa * wb * we);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Largest |Im| of the inverse transform relative to the coefficient scale.
    pub fn hermitian_defect(&self) -> T {
        let g = self.grid;
        let mut m = T::zero();
        for (p, &c) in self.data.iter().enumerate() {
            let (i, j, k) = g.unravel(p);
            let q = g.idx((g.n - i) % g.n, (g.n - j) % g.n, (g.n - k) % g.n);
            m = m.max((c - self.data[q].conj()).norm());
        }
        m
    }
}

fn axis_factor<T: Real>(g: &GridSpec, i: usize, order: usize) -> C<T> {
    if order == 0 {
        return C::new(T::one(), T::zero());
    }
    if order % 2 == 1 && g.is_nyquist(i) {
        return C::new(T::zero(), T::zero());
    }
    let k = g.kappa(i);
    // (ik)^order
    let mag = k.powi(order as i32);
    match order % 4 {
        0 => C::new(T::lit(mag), T::zero()),
        1 => C::new(T::zero(), T::lit(mag)),
        2 => C::new(T::lit(-mag), T::zero()),
        _ => C::new(T::zero(), T::lit(-mag)),
    }
}

/// Two-thirds rule: keep modes with 3|k_j| < n on every axis.
#[derive(Clone, Debug)]
pub struct DealiasMask {
    keep_axis: Vec<bool>,
}

impl DealiasMask {
    pub fn new(grid: GridSpec) -> Self {
        let keep_axis = (0..grid.n).map(|i| 3 * grid.wavenumber(i).unsigned_abs() < grid.n as u64).collect();
        DealiasMask { keep_axis }
    }

    #[inline]
    pub fn keep(&self, i: usize, j: usize, k: usize) -> bool {
        self.keep_axis[i] && self.keep_axis[j] && self.keep_axis[k]
    }

    /// Largest retained |k_j|.
    pub fn band(grid: GridSpec) -> usize {
        (grid.n - 1) / 3
    }
}

/// Spectral vector-calculus helpers on `[SpectralField; 3]`.
pub mod vector {
    use super::*;

    pub fn divergence<T: Real>(u: &[SpectralField<T>; 3]) -> SpectralField<T> {
        u[0].d(0).add(&u[1].d(1)).add(&u[2].d(2))
    }

    pub fn curl<T: Real>(u: &[SpectralField<T>; 3]) -> [SpectralField<T>; 3] {
        [
            u[2].d(1).add(&u[1].d(2).scaled(-T::one())),
            u[0].d(2).add(&u[2].d(0).scaled(-T::one())),
            u[1].d(0).add(&u[0].d(1).scaled(-T::one())),
        ]
    }

    pub fn gradient<T: Real>(f: &SpectralField<T>) -> [SpectralField<T>; 3] {
        [f.d(0), f.d(1), f.d(2)]
    }

    pub fn laplacian<T: Real>(u: &[SpectralField<T>; 3]) -> [SpectralField<T>; 3] {
        [u[0].laplacian(), u[1].laplacian(), u[2].laplacian()]
    }

    /// Leray projection: û − ξ(ξ·û)/|ξ|².
    pub fn leray<T: Real>(u: &[SpectralField<T>; 3]) -> [SpectralField<T>; 3] {
        let g = u[0].grid;
        let mut out = u.clone();
        let [o0, o1, o2] = &mut out;
        o0.data
            .par_iter_mut()
            .zip(o1.data.par_iter_mut())
            .zip(o2.data.par_iter_mut())
            .enumerate()
            .for_each(|(p, ((a, b), c))| {
                let (i, j, k) = g.unravel(p);
                let kv = [T::lit(g.kappa(i)), T::lit(g.kappa(j)), T::lit(g.kappa(k))];
                let k2 = kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2];
                if k2 == T::zero() {
                    return;
                }
                let dot = (*a * kv[0] + *b * kv[1] + *c * kv[2]) / k2;
                *a = *a - dot * kv[0];
                *b = *b - dot * kv[1];
                *c = *c - dot * kv[2];
            });
        out
    }

    pub fn energy<T: Real>(u: &[SpectralField<T>; 3]) -> T {
        u[0].energy() + u[1].energy() + u[2].energy()
    }

    /// ‖∇u‖₂² by Parseval.
    pub fn grad_energy<T: Real>(u: &[SpectralField<T>; 3]) -> T {
        let g = u[0].grid;
        let mut s = T::zero();
        for c in u {
            s = s + crate::reduce::sum_range(g.len(), |p| {
                let (i, j, k) = g.unravel(p);
                let k2 = g.kappa(i).powi(2) + g.kappa(j).powi(2) + g.kappa(k).powi(2);
                c.data[p].norm_sqr() * T::lit(k2)
            });
        }
        s * T::lit(g.l.powi(3))
    }
}
