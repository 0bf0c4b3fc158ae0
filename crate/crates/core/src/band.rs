//! Band-limited fields stored as a cube of Fourier coefficients |k_j| ≤ K,
//! with exact evaluation at arbitrary points and on lattices.

use crate::grid::GridSpec;
use crate::scalar::Real;
use crate::spectral::{SpectralField, C};
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq)]
pub struct BandField<T> {
    pub grid: GridSpec,
    pub band: usize,
    pub coeffs: Vec<C<T>>,
}

impl<T: Real> BandField<T> {
    #[inline]
    pub fn width(&self) -> usize {
        2 * self.band + 1
    }

    #[inline]
    pub fn slot(&self, k1: i64, k2: i64, k3: i64) -> usize {
        let w = self.width() as i64;
        let b = self.band as i64;
        ((k1 + b) + w * ((k2 + b) + w * (k3 + b))) as usize
    }

    /// Keeps the modes |k_j| ≤ band; `band` must be below n/2.
    pub fn from_spectral(s: &SpectralField<T>, band: usize) -> Self {
        let g = s.grid;
        assert!(2 * band < g.n, "band {band} does not fit grid {}", g.n);
        let w = 2 * band + 1;
        let mut coeffs = vec![C::new(T::zero(), T::zero()); w * w * w];
        let b = band as i64;
        let n = g.n as i64;
        for k3 in -b..=b {
            for k2 in -b..=b {
                for k1 in -b..=b {
                    let p = g.idx(k1.rem_euclid(n) as usize, k2.rem_euclid(n) as usize, k3.rem_euclid(n) as usize);
                    let q = ((k1 + b) + w as i64 * ((k2 + b) + w as i64 * (k3 + b))) as usize;
                    coeffs[q] = s.data[p];
                }
            }
        }
        BandField { grid: g, band, coeffs }
    }

    pub fn to_spectral(&self, grid: GridSpec) -> SpectralField<T> {
        assert!(2 * self.band < grid.n);
        let mut s = SpectralField::zeros(grid);
        let b = self.band as i64;
        let n = grid.n as i64;
        for k3 in -b..=b {
            for k2 in -b..=b {
                for k1 in -b..=b {
                    let p = grid.idx(k1.rem_euclid(n) as usize, k2.rem_euclid(n) as usize, k3.rem_euclid(n) as usize);
                    s.data[p] = self.coeffs[self.slot(k1, k2, k3)];
                }
            }
        }
        s
    }

    /// Multiplies by (iκ)^α with κ = 2πk/L.
    pub fn derivative(&self, alpha: [usize; 3]) -> Self {
        let b = self.band as i64;
        let kap = 2.0 * PI / self.grid.l;
        let f = |k: i64, o: usize| -> C<f64> {
            let v = (kap * k as f64).powi(o as i32);
            match o % 4 {
                0 => C::new(v, 0.0),
                1 => C::new(0.0, v),
                2 => C::new(-v, 0.0),
                _ => C::new(0.0, -v),
            }
        };
        let mut out = self.clone();
        for k3 in -b..=b {
            for k2 in -b..=b {
                for k1 in -b..=b {
                    let m = f(k1, alpha[0]) * f(k2, alpha[1]) * f(k3, alpha[2]);
                    let q = self.slot(k1, k2, k3);
                    let c = self.coeffs[q];
                    out.coeffs[q] = C::new(
                        T::lit(m.re) * c.re - T::lit(m.im) * c.im,
                        T::lit(m.re) * c.im + T::lit(m.im) * c.re,
                    );
                }
            }
        }
        out
    }

    /// Values on the nodes of `fft`'s grid.
    pub fn sample(&self, fft: &crate::spectral::Fft3<T>) -> Vec<T> {
        fft.inverse(&self.to_spectral(fft.grid()))
    }

    pub fn to_f64(&self) -> BandField<f64> {
        BandField {
            grid: self.grid,
            band: self.band,
            coeffs: self.coeffs.iter().map(|c| C::new(c.re.to_f64_lossy(), c.im.to_f64_lossy())).collect(),
        }
    }
}

/// Several band fields with a common band, evaluated together so the
/// exponentials are shared.
#[derive(Clone, Debug)]
pub struct BandSet {
    pub grid: GridSpec,
    pub band: usize,
    fields: Vec<BandField<f64>>,
}

impl BandSet {
    pub fn new(fields: Vec<BandField<f64>>) -> Self {
        assert!(!fields.is_empty());
        let band = fields.iter().map(|f| f.band).max().unwrap();
        let grid = fields[0].grid;
        let fields = fields.into_iter().map(|f| widen(f, band)).collect();
        BandSet { grid, band, fields }
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn field(&self, i: usize) -> &BandField<f64> {
        &self.fields[i]
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    fn exps(&self, x: f64) -> Vec<C<f64>> {
        let b = self.band as i64;
        let kap = 2.0 * PI / self.grid.l;
        (-b..=b).map(|k| C::from_polar(1.0, kap * k as f64 * x)).collect()
    }

    /// Values of every field at one point.
    pub fn eval(&self, x: [f64; 3], out: &mut [f64]) {
        let w = 2 * self.band + 1;
        let (ex, ey, ez) = (self.exps(x[0]), self.exps(x[1]), self.exps(x[2]));
        let mut row = vec![C::new(0.0, 0.0); w];
        for (f, o) in self.fields.iter().zip(out.iter_mut()) {
            let mut acc = C::new(0.0, 0.0);
            for k3 in 0..w {
                let mut plane = C::new(0.0, 0.0);
                for k2 in 0..w {
                    let base = w * (k2 + w * k3);
                    let line = &f.coeffs[base..base + w];
                    let mut s = C::new(0.0, 0.0);
                    for (c, e) in line.iter().zip(&ex) {
                        s += c * e;
                    }
                    row[k2] = s;
                }
                for k2 in 0..w {
                    plane += row[k2] * ey[k2];
                }
                acc += plane * ez[k3];
            }
            *o = acc.re;
        }
    }

    /// Evaluates all fields at `points` in parallel; result is point-major.
    pub fn eval_many(&self, points: &[[f64; 3]]) -> Vec<f64> {
        let nf = self.fields.len();
        let mut out = vec![0.0; points.len() * nf];
        out.par_chunks_mut(nf).zip(points.par_iter()).for_each(|(o, p)| self.eval(*p, o));
        out
    }

    /// Evaluates on lattice nodes grouped in columns. Output is node-major
    /// with `len()` values per node.
    pub fn eval_columns(&self, xs: &[f64], ys: &[f64], zs: &[f64], columns: &[Column], n_nodes: usize) -> Vec<f64> {
        let nf = self.fields.len();
        let w = 2 * self.band + 1;
        let ex: Vec<Vec<C<f64>>> = xs.iter().map(|&x| self.exps(x)).collect();
        let ey: Vec<Vec<C<f64>>> = ys.iter().map(|&y| self.exps(y)).collect();
        let ez: Vec<Vec<C<f64>>> = zs.iter().map(|&z| self.exps(z)).collect();
        let mut out = vec![0.0; n_nodes * nf];
        // stage 1: contract k1 for every x that appears
        let mut used_x = vec![false; xs.len()];
        for c in columns {
            used_x[c.ix] = true;
        }
        let stage1: Vec<Option<Vec<C<f64>>>> = (0..xs.len())
            .into_par_iter()
            .map(|ix| {
                if !used_x[ix] {
                    return None;
                }
                let mut s = vec![C::new(0.0, 0.0); nf * w * w];
                for (fi, f) in self.fields.iter().enumerate() {
                    for k23 in 0..w * w {
                        let line = &f.coeffs[w * k23..w * k23 + w];
                        let mut acc = C::new(0.0, 0.0);
                        for (c, e) in line.iter().zip(&ex[ix]) {
                            acc += c * e;
                        }
                        s[fi * w * w + k23] = acc;
                    }
                }
                Some(s)
            })
            .collect();
        let mut slices: Vec<&mut [f64]> = Vec::with_capacity(columns.len());
        let mut rest: &mut [f64] = &mut out;
        let mut cursor = 0usize;
        for col in columns {
            assert_eq!(col.offset, cursor, "columns must be laid out consecutively");
            let len = col.len() * nf;
            let (head, tail) = rest.split_at_mut(len);
            slices.push(head);
            rest = tail;
            cursor += col.len();
        }
        slices.into_par_iter().zip(columns.par_iter()).for_each(|(dst, col)| {
            let s1 = stage1[col.ix].as_ref().unwrap();
            let mut s2 = vec![C::new(0.0, 0.0); nf * w];
            for fi in 0..nf {
                for k3 in 0..w {
                    let mut acc = C::new(0.0, 0.0);
                    for k2 in 0..w {
                        acc += s1[fi * w * w + k2 + w * k3] * ey[col.iy][k2];
                    }
                    s2[fi * w + k3] = acc;
                }
            }
            let mut node = 0usize;
            for &(iz, count) in &col.runs {
                for dz in 0..count {
                    let e = &ez[iz + dz];
                    for fi in 0..nf {
                        let mut acc = 0.0;
                        for k3 in 0..w {
                            let c = s2[fi * w + k3];
                            acc += c.re * e[k3].re - c.im * e[k3].im;
                        }
                        dst[node * nf + fi] = acc;
                    }
                    node += 1;
                }
            }
        });
        out
    }
}

/// One lattice column: runs of consecutive z nodes `(iz, count)` whose
/// values are stored back to back starting at node `offset`.
#[derive(Clone, Debug)]
pub struct Column {
    pub ix: usize,
    pub iy: usize,
    pub runs: Vec<(usize, usize)>,
    pub offset: usize,
}

impl Column {
    pub fn len(&self) -> usize {
        self.runs.iter().map(|r| r.1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }
}

fn widen(f: BandField<f64>, band: usize) -> BandField<f64> {
    if f.band == band {
        return f;
    }
    let w = 2 * band + 1;
    let mut out = BandField { grid: f.grid, band, coeffs: vec![C::new(0.0, 0.0); w * w * w] };
    let b = f.band as i64;
    for k3 in -b..=b {
        for k2 in -b..=b {
            for k1 in -b..=b {
                let q = out.slot(k1, k2, k3);
                out.coeffs[q] = f.coeffs[f.slot(k1, k2, k3)];
            }
        }
    }
    out
}
