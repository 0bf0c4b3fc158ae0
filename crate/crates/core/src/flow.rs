//! Exact pointwise evaluation of a stored velocity frame together with its
//! derivatives, pressure and time derivative.

use crate::band::{BandField, BandSet};
use crate::error::Result;
use crate::scalar::Real;
use crate::solver::{exact_terms, Trajectory};
use crate::spectral::DealiasMask;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointFlow {
    pub u: [f64; 3],
    /// du[i][j] = ∂_j u_i
    pub du: [[f64; 3]; 3],
    pub lap: [f64; 3],
}

impl PointFlow {
    /// (u·∇)u
    pub fn advection(&self) -> [f64; 3] {
        std::array::from_fn(|i| (0..3).map(|j| self.u[j] * self.du[i][j]).sum())
    }
}

/// One time level: u, ∇u, Δu (velocity band) and π, ∂_t u (doubled band).
pub struct FlowAt {
    pub t: f64,
    pub nu: f64,
    pub velocity: BandSet,
    pub pressure: BandSet,
    pub dudt: BandSet,
}

impl FlowAt {
    pub fn new<T: Real>(traj: &Trajectory<T>, t: f64) -> Result<Self> {
        let frame = traj.frame_at(t)?;
        let u: Vec<BandField<f64>> = frame.u.iter().map(|b| b.to_f64()).collect();
        let mut fields = u.clone();
        for c in 0..3 {
            for j in 0..3 {
                let mut a = [0; 3];
                a[j] = 1;
                fields.push(u[c].derivative(a));
            }
        }
        for c in 0..3 {
            let lap = (0..3).fold(None::<BandField<f64>>, |acc, j| {
                let mut a = [0; 3];
                a[j] = 2;
                let d = u[c].derivative(a);
                Some(match acc {
                    None => d,
                    Some(mut s) => {
                        s.coeffs.iter_mut().zip(&d.coeffs).for_each(|(x, y)| *x += y);
                        s
                    }
                })
            });
            fields.push(lap.unwrap());
        }
        let terms = exact_terms(&traj.spectral(frame), traj.nu)?;
        let band = 2 * DealiasMask::band(traj.grid);
        let p = BandField::from_spectral(&terms.pressure, band).to_f64();
        let dudt: Vec<BandField<f64>> = terms.dudt.iter().map(|s| BandField::from_spectral(s, band).to_f64()).collect();
        Ok(FlowAt {
            t: frame.t,
            nu: traj.nu,
            velocity: BandSet::new(fields),
            pressure: BandSet::new(vec![p]),
            dudt: BandSet::new(dudt),
        })
    }

    pub fn point(&self, x: [f64; 3]) -> PointFlow {
        let mut v = [0.0; 15];
        self.velocity.eval(x, &mut v);
        unpack(&v)
    }

    pub fn points(&self, xs: &[[f64; 3]]) -> Vec<PointFlow> {
        xs.par_iter().map(|x| self.point(*x)).collect()
    }

    pub fn pressure_at(&self, xs: &[[f64; 3]]) -> Vec<f64> {
        self.pressure.eval_many(xs)
    }

    pub fn dudt_at(&self, xs: &[[f64; 3]]) -> Vec<[f64; 3]> {
        self.dudt.eval_many(xs).chunks(3).map(|c| [c[0], c[1], c[2]]).collect()
    }
}

pub fn unpack(v: &[f64]) -> PointFlow {
    PointFlow {
        u: [v[0], v[1], v[2]],
        du: std::array::from_fn(|i| std::array::from_fn(|j| v[3 + 3 * i + j])),
        lap: [v[12], v[13], v[14]],
    }
}

/// Radial component u_r = x̂·u with its gradient and Laplacian.
pub fn radial_jet(x: [f64; 3], f: &PointFlow) -> (f64, [f64; 3], f64) {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let n = [x[0] / r, x[1] / r, x[2] / r];
    let ur = n[0] * f.u[0] + n[1] * f.u[1] + n[2] * f.u[2];
    let mut g = [0.0; 3];
    for (a, ga) in g.iter_mut().enumerate() {
        *ga = (f.u[a] - n[a] * ur) / r + (0..3).map(|i| n[i] * f.du[i][a]).sum::<f64>();
    }
    let div = f.du[0][0] + f.du[1][1] + f.du[2][2];
    let nn: f64 = (0..3).map(|a| (0..3).map(|i| n[a] * n[i] * f.du[i][a]).sum::<f64>()).sum();
    let lap = -2.0 * ur / (r * r) + 2.0 * (div - nn) / r + (0..3).map(|i| n[i] * f.lap[i]).sum::<f64>();
    (ur, g, lap)
}
