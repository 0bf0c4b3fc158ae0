//! Values of smooth fields on a fine lattice restricted to a spherical
//! shell, with tricubic interpolation.

use crate::band::{BandSet, Column};

/// Lattice nodes x_i = −E + i·h whose radius lies in [r_lo, r_hi], grouped
/// into z-runs per (x, y) column.
#[derive(Clone, Debug)]
pub struct ShellLattice {
    pub h: f64,
    pub extent: f64,
    pub n: usize,
    pub r_lo: f64,
    pub r_hi: f64,
    pub columns: Vec<Column>,
    col_of: Vec<u32>,
    pub n_nodes: usize,
}

impl ShellLattice {
    /// Covers every interpolation stencil around points with radius in
    /// [a, b].
    pub fn covering(a: f64, b: f64, h: f64) -> Self {
        let m = 3.5 * h;
        Self::new((a - m).max(0.0), b + m, h)
    }

    pub fn new(r_lo: f64, r_hi: f64, h: f64) -> Self {
        let n = (2.0 * (r_hi + 2.0 * h) / h).ceil() as usize + 1;
        let extent = 0.5 * (n - 1) as f64 * h;
        let coord = |i: usize| -extent + i as f64 * h;
        let mut columns = Vec::new();
        let mut col_of = vec![u32::MAX; n * n];
        let mut offset = 0usize;
        for iy in 0..n {
            for ix in 0..n {
                let rho2 = coord(ix).powi(2) + coord(iy).powi(2);
                if rho2 > r_hi * r_hi {
                    continue;
                }
                let mut runs: Vec<(usize, usize)> = Vec::new();
                for iz in 0..n {
                    let r = (rho2 + coord(iz).powi(2)).sqrt();
                    if r >= r_lo && r <= r_hi {
                        match runs.last_mut() {
                            Some((s, c)) if *s + *c == iz => *c += 1,
                            _ => runs.push((iz, 1)),
                        }
                    }
                }
                if runs.is_empty() {
                    continue;
                }
                let col = Column { ix, iy, runs, offset };
                offset += col.len();
                col_of[ix + n * iy] = columns.len() as u32;
                columns.push(col);
            }
        }
        ShellLattice { h, extent, n, r_lo, r_hi, columns, col_of, n_nodes: offset }
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| -self.extent + i as f64 * self.h).collect()
    }

    /// Position of node (ix, iy, iz) in node-major storage.
    #[inline]
    pub fn node(&self, ix: usize, iy: usize, iz: usize) -> Option<usize> {
        if ix >= self.n || iy >= self.n {
            return None;
        }
        let c = self.col_of[ix + self.n * iy];
        if c == u32::MAX {
            return None;
        }
        let col = &self.columns[c as usize];
        let mut base = col.offset;
        for &(s, cnt) in &col.runs {
            if iz >= s && iz < s + cnt {
                return Some(base + iz - s);
            }
            base += cnt;
        }
        None
    }

    pub fn positions(&self) -> Vec<[f64; 3]> {
        let c = self.coords();
        let mut out = Vec::with_capacity(self.n_nodes);
        for col in &self.columns {
            for &(s, cnt) in &col.runs {
                for iz in s..s + cnt {
                    out.push([c[col.ix], c[col.iy], c[iz]]);
                }
            }
        }
        out
    }

    /// Exact band evaluation of every field of `set` at the nodes.
    pub fn evaluate(&self, set: &BandSet) -> Vec<f64> {
        let c = self.coords();
        set.eval_columns(&c, &c, &c, &self.columns, self.n_nodes)
    }
}

#[inline]
fn lagrange4(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

/// `nf` values per lattice node, node-major.
#[derive(Clone, Debug)]
pub struct ShellTable {
    pub lattice: ShellLattice,
    pub nf: usize,
    pub data: Vec<f64>,
}

impl ShellTable {
    pub fn new(lattice: ShellLattice, nf: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), nf * lattice.n_nodes);
        ShellTable { lattice, nf, data }
    }

    /// Tricubic Lagrange interpolation of all fields at x. Returns false if
    /// the stencil leaves the lattice.
    pub fn interp(&self, x: [f64; 3], out: &mut [f64]) -> bool {
        let lat = &self.lattice;
        let mut base = [0usize; 3];
        let mut w = [[0.0; 4]; 3];
        for a in 0..3 {
            let s = (x[a] + lat.extent) / lat.h;
            let f = s.floor();
            if f < 1.0 || f + 2.0 >= lat.n as f64 {
                return false;
            }
            base[a] = f as usize - 1;
            w[a] = lagrange4(s - f);
        }
        out[..self.nf].iter_mut().for_each(|o| *o = 0.0);
        let nf = self.nf;
        for (dy, wy) in w[1].iter().enumerate() {
            for (dx, wx) in w[0].iter().enumerate() {
                let Some(start) = lat.node(base[0] + dx, base[1] + dy, base[2]) else { return false };
                if lat.node(base[0] + dx, base[1] + dy, base[2] + 3) != Some(start + 3) {
                    return false;
                }
                let wxy = wx * wy;
                for (dz, wz) in w[2].iter().enumerate() {
                    let wt = wxy * wz;
                    let row = &self.data[(start + dz) * nf..(start + dz + 1) * nf];
                    for (o, v) in out.iter_mut().zip(row) {
                        *o += wt * v;
                    }
                }
            }
        }
        true
    }
}
