//! Real-space scalar and vector fields on a [`GridSpec`].

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::scalar::Real;
use rayon::prelude::*;

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T> {
    pub grid: GridSpec,
    pub data: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField<T> {
    pub grid: GridSpec,
    pub comps: [Vec<T>; 3],
    pub time: f64,
}

impl<T: Real> ScalarField<T> {
    pub fn zeros(grid: GridSpec) -> Self {
        ScalarField { grid, data: vec![T::zero(); grid.len()] }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64 + Sync) -> Self {
        let data = (0..grid.len())
            .into_par_iter()
            .map(|p| {
                let (i, j, k) = grid.unravel(p);
                T::lit(f(grid.point(i, j, k)))
            })
            .collect();
        ScalarField { grid, data }
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(p) => Err(Error::input(format!("non-finite sample at linear index {p}"))),
            None => Ok(()),
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(T) -> T + Sync) -> Self {
        ScalarField { grid: self.grid, data: self.data.par_iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, s: T) -> Self {
        self.map(|v| v * s)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        Ok(ScalarField {
            grid: self.grid,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a * *b).collect(),
        })
    }

    /// Midpoint-rule integral.
    pub fn integral(&self) -> T {
        crate::reduce::sum(&self.data) * T::lit(self.grid.cell_volume())
    }
}

impl<T: Real> VectorField<T> {
    pub fn zeros(grid: GridSpec) -> Self {
        let z = vec![T::zero(); grid.len()];
        VectorField { grid, comps: [z.clone(), z.clone(), z], time: 0.0 }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> [f64; 3] + Sync) -> Self {
        let vals: Vec<[f64; 3]> = (0..grid.len())
            .into_par_iter()
            .map(|p| {
                let (i, j, k) = grid.unravel(p);
                f(grid.point(i, j, k))
            })
            .collect();
        let comps = std::array::from_fn(|c| vals.iter().map(|v| T::lit(v[c])).collect());
        VectorField { grid, comps, time: 0.0 }
    }

    pub fn from_components(a: ScalarField<T>, b: ScalarField<T>, c: ScalarField<T>) -> Result<Self> {
        a.grid.same_as(&b.grid)?;
        a.grid.same_as(&c.grid)?;
        Ok(VectorField { grid: a.grid, comps: [a.data, b.data, c.data], time: 0.0 })
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    pub fn component(&self, c: usize) -> ScalarField<T> {
        ScalarField { grid: self.grid, data: self.comps[c].clone() }
    }

    pub fn check_finite(&self) -> Result<()> {
        for (c, comp) in self.comps.iter().enumerate() {
            if let Some(p) = comp.iter().position(|v| !v.is_finite()) {
                return Err(Error::input(format!("non-finite sample in component {c} at {p}")));
            }
        }
        Ok(())
    }

    /// Pointwise Euclidean magnitude.
    pub fn magnitude(&self) -> ScalarField<T> {
        let [a, b, c] = &self.comps;
        let data = (0..self.grid.len())
            .map(|p| (a[p] * a[p] + b[p] * b[p] + c[p] * c[p]).sqrt())
            .collect();
        ScalarField { grid: self.grid, data }
    }

    pub fn max_magnitude(&self) -> T {
        self.magnitude().max_abs()
    }

    pub fn scaled(&self, s: T) -> Self {
        let comps = std::array::from_fn(|c| self.comps[c].iter().map(|&v| v * s).collect());
        VectorField { grid: self.grid, comps, time: self.time }
    }

    pub fn axpy(&self, s: T, other: &Self) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        let comps = std::array::from_fn(|c| {
            self.comps[c].iter().zip(&other.comps[c]).map(|(&a, &b)| a + s * b).collect()
        });
        Ok(VectorField { grid: self.grid, comps, time: self.time })
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut m = T::zero();
        for c in 0..3 {
            for (a, b) in self.comps[c].iter().zip(&other.comps[c]) {
                m = m.max((*a - *b).abs());
            }
        }
        m
    }
}
