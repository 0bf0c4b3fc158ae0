//! Compactly supported divergence-free initial data u0 = curl(χA).

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::grid::GridSpec;
use crate::norms::sobolev_norms;
use crate::scalar::Real;
use crate::spectral::{vector, DealiasMask, Fft3, SpectralField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Random trigonometric potential A with wavevectors (π/(4R0))·m, m ∈ [−2,2]³,
/// and Gaussian-damped coefficients.
#[derive(Clone, Debug)]
pub struct Potential {
    kappa: f64,
    modes: Vec<([f64; 3], [f64; 3], [f64; 3])>,
}

impl Potential {
    pub fn new(r0: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut modes = Vec::new();
        for a in -2i32..=2 {
            for b in -2i32..=2 {
                for c in -2i32..=2 {
                    let m = [a as f64, b as f64, c as f64];
                    let w = (-(m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) / 4.0).exp();
                    let cos: [f64; 3] = std::array::from_fn(|_| w * rng.gen_range(-1.0..1.0));
                    let sin: [f64; 3] = std::array::from_fn(|_| w * rng.gen_range(-1.0..1.0));
                    modes.push((m, cos, sin));
                }
            }
        }
        Potential { kappa: std::f64::consts::PI / (4.0 * r0), modes }
    }

    /// A_c, ∂_j A_c and ∂_j∂_l A_c at x.
    pub fn jet(&self, x: [f64; 3]) -> ([f64; 3], [[f64; 3]; 3], [[[f64; 3]; 3]; 3]) {
        let mut a = [0.0; 3];
        let mut da = [[0.0; 3]; 3];
        let mut dda = [[[0.0; 3]; 3]; 3];
        for (m, cs, sn) in &self.modes {
            let k = [self.kappa * m[0], self.kappa * m[1], self.kappa * m[2]];
            let ph = k[0] * x[0] + k[1] * x[1] + k[2] * x[2];
            let (s, co) = ph.sin_cos();
            for c in 0..3 {
                let v = cs[c] * co + sn[c] * s;
                let dv = -cs[c] * s + sn[c] * co;
                a[c] += v;
                for j in 0..3 {
                    da[c][j] += k[j] * dv;
                    for l in 0..3 {
                        dda[c][j][l] -= k[j] * k[l] * v;
                    }
                }
            }
        }
        (a, da, dda)
    }
}

/// Radial cutoff χ = (1 − r²/r₁²)₊⁸ with its gradient and Hessian.
fn chi_jet(x: [f64; 3], r1: f64) -> (f64, [f64; 3], [[f64; 3]; 3]) {
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    let q = 1.0 - r2 / (r1 * r1);
    let j = if q <= 0.0 { [0.0; 3] } else { [q.powi(8), 8.0 * q.powi(7), 56.0 * q.powi(6)] };
    let c1 = -2.0 / (r1 * r1);
    let grad = [j[1] * c1 * x[0], j[1] * c1 * x[1], j[1] * c1 * x[2]];
    let mut hess = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            hess[a][b] = j[2] * c1 * c1 * x[a] * x[b] + if a == b { j[1] * c1 } else { 0.0 };
        }
    }
    (j[0], grad, hess)
}

const EPS: [[[f64; 3]; 3]; 3] = {
    let mut e = [[[0.0; 3]; 3]; 3];
    e[0][1][2] = 1.0;
    e[1][2][0] = 1.0;
    e[2][0][1] = 1.0;
    e[0][2][1] = -1.0;
    e[2][1][0] = -1.0;
    e[1][0][2] = -1.0;
    e
};

/// curl(χA) and its Jacobian ∂_l u_i at one point, by the product rule.
pub fn velocity_jet(pot: &Potential, r1: f64, x: [f64; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let (chi, dchi, hchi) = chi_jet(x, r1);
    if chi == 0.0 && dchi == [0.0; 3] {
        return ([0.0; 3], [[0.0; 3]; 3]);
    }
    let (a, da, dda) = pot.jet(x);
    // ∂_j(χA_k) and ∂_l∂_j(χA_k)
    let mut d1 = [[0.0; 3]; 3];
    let mut d2 = [[[0.0; 3]; 3]; 3];
    for k in 0..3 {
        for j in 0..3 {
            d1[k][j] = dchi[j] * a[k] + chi * da[k][j];
            for l in 0..3 {
                d2[k][j][l] = hchi[j][l] * a[k] + dchi[j] * da[k][l] + dchi[l] * da[k][j] + chi * dda[k][j][l];
            }
        }
    }
    let mut u = [0.0; 3];
    let mut du = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let e = EPS[i][j][k];
                if e == 0.0 {
                    continue;
                }
                u[i] += e * d1[k][j];
                for l in 0..3 {
                    du[i][l] += e * d2[k][j][l];
                }
            }
        }
    }
    (u, du)
}

#[derive(Clone, Debug, Serialize)]
pub struct InitialDataReport {
    pub r0: f64,
    pub seed: u64,
    pub amplitude: f64,
    /// ‖div u0‖₂ / ‖∇u0‖₂ from the analytic Jacobian at the nodes.
    pub divergence_ratio: f64,
    pub grad_l2: f64,
    pub h5: f64,
}

/// Samples u0 = curl(χA) on the grid, rescaled so that the grid H⁵ norm
/// equals `amplitude`.
pub fn make_initial_data<T: Real>(grid: GridSpec, r0: f64, seed: u64, amplitude: f64) -> Result<(VectorField<T>, InitialDataReport)> {
    if !(r0 > 0.0 && r0 < 0.5 * grid.l - 1.0) {
        return Err(Error::input(format!("support radius {r0} does not fit a box of side {}", grid.l)));
    }
    if !(amplitude >= 0.0 && amplitude.is_finite()) {
        return Err(Error::input("amplitude must be finite and nonnegative"));
    }
    let pot = Potential::new(r0, seed);
    let r1 = r0 * 15.0 / 16.0;
    let jets: Vec<([f64; 3], [[f64; 3]; 3])> = (0..grid.len())
        .map(|p| {
            let (i, j, k) = grid.unravel(p);
            velocity_jet(&pot, r1, grid.point(i, j, k))
        })
        .collect();
    let div2: f64 = jets.iter().map(|(_, d)| (d[0][0] + d[1][1] + d[2][2]).powi(2)).sum();
    let grad2: f64 = jets.iter().map(|(_, d)| d.iter().flatten().map(|v| v * v).sum::<f64>()).sum();
    let unit = VectorField::<f64>::from_fn(grid, |x| velocity_jet(&pot, r1, x).0);
    let fft = Fft3::<f64>::new(grid);
    let h5 = sobolev_norms(&fft, &fft.forward_vector(&unit), 5)?[5].h;
    if !(h5 > 0.0) {
        return Err(Error::numerical("initial potential produced a zero field"));
    }
    let s = amplitude / h5;
    let u = VectorField {
        grid,
        comps: std::array::from_fn(|c| unit.comps[c].iter().map(|&v| T::lit(s * v)).collect()),
        time: 0.0,
    };
    let report = InitialDataReport {
        r0,
        seed,
        amplitude,
        divergence_ratio: if grad2 > 0.0 { (div2 / grad2).sqrt() } else { 0.0 },
        grad_l2: s * (grad2 * grid.cell_volume()).sqrt(),
        h5: amplitude,
    };
    Ok((u, report))
}

#[derive(Clone, Debug, Serialize)]
pub struct ProjectionReport {
    pub oversample: usize,
    pub smoothing: f64,
    /// Relative L² change from truncating to the dealiased band and projecting.
    pub departure: f64,
    pub sample: InitialDataReport,
}

/// Samples u0 on a grid `oversample` times finer, applies the heat filter
/// e^{sΔ}, removes the mean, truncates to the dealiased band of `grid` and
/// Leray-projects.
pub fn band_limited_initial_data<T: Real>(grid: GridSpec, r0: f64, seed: u64, amplitude: f64, oversample: usize, smoothing: f64) -> Result<([SpectralField<T>; 3], ProjectionReport)> {
    let fine = grid.refined(oversample.max(1));
    let (u, sample) = make_initial_data::<T>(fine, r0, seed, amplitude)?;
    let fft = Fft3::<T>::new(fine);
    let hat = fft.forward_vector(&u);
    drop(u);
    let mask = DealiasMask::new(grid);
    let coarse: [SpectralField<T>; 3] = std::array::from_fn(|c| {
        let mut s = hat[c].resample(grid.n).expect("coarsening");
        for (p, v) in s.data.iter_mut().enumerate() {
            let (i, j, k) = grid.unravel(p);
            if !mask.keep(i, j, k) || p == 0 {
                *v = crate::spectral::C::new(T::zero(), T::zero());
            } else {
                let k2 = grid.kappa(i).powi(2) + grid.kappa(j).powi(2) + grid.kappa(k).powi(2);
                *v = *v * T::lit((-smoothing * k2).exp());
            }
        }
        s
    });
    let proj = vector::leray(&coarse);
    let e_fine = vector::energy(&hat).to_f64_lossy();
    let back: [SpectralField<T>; 3] = std::array::from_fn(|c| proj[c].resample(fine.n).expect("refinement"));
    let diff: [SpectralField<T>; 3] = std::array::from_fn(|c| hat[c].add(&back[c].scaled(-T::one())));
    let departure = if e_fine > 0.0 { (vector::energy(&diff).to_f64_lossy() / e_fine).sqrt() } else { 0.0 };
    Ok((proj, ProjectionReport { oversample, smoothing, departure, sample }))
}
