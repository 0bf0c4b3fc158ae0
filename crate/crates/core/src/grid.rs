use crate::error::{Error, Result};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};

/// Periodic box [−L/2, L/2)³ with `n` nodes per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub l: f64,
}

impl GridSpec {
    pub fn new(n: usize, l: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::input(format!("grid size must be even and >= 4, got {n}")));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::input(format!("box length must be positive, got {l}")));
        }
        Ok(GridSpec { n, l })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.l / self.n as f64
    }

    #[inline]
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(3)
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.l + i as f64 * self.h()
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [self.coord(i), self.coord(j), self.coord(k)]
    }

    /// Linear index, x fastest.
    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    #[inline]
    pub fn unravel(&self, p: usize) -> (usize, usize, usize) {
        (p % self.n, (p / self.n) % self.n, p / (self.n * self.n))
    }

    /// Signed wavenumber for storage slot `i`, in [−n/2, n/2).
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    #[inline]
    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// Angular wavenumber 2πk/L along one axis.
    #[inline]
    pub fn kappa(&self, i: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.wavenumber(i) as f64 / self.l
    }

    pub fn refined(&self, factor: usize) -> GridSpec {
        GridSpec { n: self.n * factor, l: self.l }
    }

    pub fn same_as(&self, other: &GridSpec) -> Result<()> {
        if self != other {
            return Err(Error::input(format!("grid mismatch: {self:?} vs {other:?}")));
        }
        Ok(())
    }

    pub fn coords<T: Real>(&self) -> Vec<T> {
        (0..self.n).map(|i| T::lit(self.coord(i))).collect()
    }
}
