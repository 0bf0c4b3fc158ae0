//! Pseudo-spectral Navier–Stokes on the periodic box: integrating-factor RK4,
//! two-thirds dealiasing, Leray projection of every stage.

use crate::band::BandField;
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::grid::GridSpec;
use crate::reduce;
use crate::scalar::Real;
use crate::spectral::{vector, DealiasMask, Fft3, SpectralField, C};
use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct SolverState<T> {
    pub u_hat: [SpectralField<T>; 3],
    pub t: f64,
    pub nu: f64,
}

pub struct NseSolver<T: Real> {
    pub grid: GridSpec,
    pub nu: f64,
    fft: Fft3<T>,
    mask: DealiasMask,
    k2: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Frame<T> {
    pub t: f64,
    pub u: [BandField<T>; 3],
}

#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub grid: GridSpec,
    pub nu: f64,
    pub dt: f64,
    pub steps: usize,
    pub frames: Vec<Frame<T>>,
    /// Largest relative divergence seen after any step.
    pub max_divergence: f64,
}

impl<T: Real> Trajectory<T> {
    pub fn final_time(&self) -> f64 {
        self.frames.last().map(|f| f.t).unwrap_or(0.0)
    }

    /// Frame whose time is within dt/2 of `t`.
    pub fn frame_at(&self, t: f64) -> Result<&Frame<T>> {
        self.frames
            .iter()
            .find(|f| (f.t - t).abs() <= 0.5 * self.dt + 1e-12)
            .ok_or_else(|| Error::input(format!("no stored frame at t = {t}")))
    }

    pub fn spectral(&self, frame: &Frame<T>) -> [SpectralField<T>; 3] {
        std::array::from_fn(|c| frame.u[c].to_spectral(self.grid))
    }
}

impl<T: Real> NseSolver<T> {
    pub fn new(grid: GridSpec, nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::input(format!("viscosity must be positive, got {nu}")));
        }
        let k2 = (0..grid.len())
            .map(|p| {
                let (i, j, k) = grid.unravel(p);
                grid.kappa(i).powi(2) + grid.kappa(j).powi(2) + grid.kappa(k).powi(2)
            })
            .collect();
        Ok(NseSolver { grid, nu, fft: Fft3::new(grid), mask: DealiasMask::new(grid), k2 })
    }

    pub fn fft(&self) -> &Fft3<T> {
        &self.fft
    }

    fn masked(&self, s: SpectralField<T>) -> SpectralField<T> {
        let g = self.grid;
        let mut s = s;
        s.data.par_iter_mut().enumerate().for_each(|(p, c)| {
            let (i, j, k) = g.unravel(p);
            if !self.mask.keep(i, j, k) {
                *c = C::new(T::zero(), T::zero());
            }
        });
        s
    }

    /// Dealiased, Leray-projected state from grid samples. Also returns the
    /// relative L² change caused by the projection.
    pub fn project_initial(&self, u0: &VectorField<T>) -> Result<(SolverState<T>, f64)> {
        u0.check_finite()?;
        self.grid.same_as(&u0.grid)?;
        let raw = self.fft.forward_vector(u0);
        let proj = vector::leray(&raw.clone().map(|s| self.masked(s)));
        let e0 = vector::energy(&raw).to_f64_lossy();
        let diff: [SpectralField<T>; 3] = std::array::from_fn(|c| raw[c].add(&proj[c].scaled(-T::one())));
        let dep = if e0 > 0.0 { (vector::energy(&diff).to_f64_lossy() / e0).sqrt() } else { 0.0 };
        Ok((SolverState { u_hat: proj, t: u0.time, nu: self.nu }, dep))
    }

    pub fn state_from_spectral(&self, u_hat: [SpectralField<T>; 3], t: f64) -> SolverState<T> {
        let proj = vector::leray(&u_hat.map(|s| self.masked(s)));
        SolverState { u_hat: proj, t, nu: self.nu }
    }

    /// −mask·P ∂_j(u_j u_i), plus the largest |u| on the grid.
    pub fn nonlinear(&self, u_hat: &[SpectralField<T>; 3]) -> ([SpectralField<T>; 3], f64) {
        let u: Vec<Vec<T>> = u_hat.iter().map(|s| self.fft.inverse(s)).collect();
        let umax = reduce::max_range(self.grid.len(), |p| {
            (u[0][p] * u[0][p] + u[1][p] * u[1][p] + u[2][p] * u[2][p]).to_f64_lossy().sqrt()
        });
        let pairs = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];
        let prod: Vec<SpectralField<T>> = pairs
            .iter()
            .map(|&(a, b)| {
                let p: Vec<T> = u[a].iter().zip(&u[b]).map(|(x, y)| *x * *y).collect();
                self.fft.forward(&p)
            })
            .collect();
        let sym = |a: usize, b: usize| -> &SpectralField<T> {
            let i = pairs.iter().position(|&(x, y)| (x, y) == (a.min(b), a.max(b))).unwrap();
            &prod[i]
        };
        let n: [SpectralField<T>; 3] = std::array::from_fn(|i| {
            sym(i, 0).d(0).add(&sym(i, 1).d(1)).add(&sym(i, 2).d(2)).scaled(-T::one())
        });
        (vector::leray(&n.map(|s| self.masked(s))), umax)
    }

    /// Full right-hand side νΔu + N(u) of the truncated system.
    pub fn rhs(&self, u_hat: &[SpectralField<T>; 3]) -> [SpectralField<T>; 3] {
        let (n, _) = self.nonlinear(u_hat);
        std::array::from_fn(|c| u_hat[c].laplacian().scaled(T::lit(self.nu)).add(&n[c]))
    }

    /// h / (4 max|u|).
    pub fn admissible_dt(&self, state: &SolverState<T>) -> f64 {
        let u: Vec<Vec<T>> = state.u_hat.iter().map(|s| self.fft.inverse(s)).collect();
        let umax = reduce::max_range(self.grid.len(), |p| {
            (u[0][p] * u[0][p] + u[1][p] * u[1][p] + u[2][p] * u[2][p]).to_f64_lossy().sqrt()
        });
        if umax == 0.0 {
            f64::INFINITY
        } else {
            self.grid.h() / (4.0 * umax)
        }
    }

    fn factor(&self, s: &SpectralField<T>, tau: f64) -> SpectralField<T> {
        let nu = self.nu;
        let mut out = s.clone();
        out.data.par_iter_mut().zip(self.k2.par_iter()).for_each(|(c, &k2)| {
            *c = *c * T::lit((-nu * k2 * tau).exp());
        });
        out
    }

    fn combo(terms: &[(&SpectralField<T>, f64)]) -> SpectralField<T> {
        let mut out = terms[0].0.scaled(T::lit(terms[0].1));
        for (s, w) in &terms[1..] {
            out.data.par_iter_mut().zip(s.data.par_iter()).for_each(|(o, v)| *o = *o + *v * T::lit(*w));
        }
        out
    }

    /// One integrating-factor RK4 step.
    pub fn step(&self, state: &SolverState<T>, dt: f64) -> Result<SolverState<T>> {
        if !(dt > 0.0) {
            return Err(Error::input(format!("time step must be positive, got {dt}")));
        }
        let u = &state.u_hat;
        let (n1, umax) = self.nonlinear(u);
        if !umax.is_finite() {
            return Err(Error::numerical(format!("non-finite velocity at t = {}", state.t)));
        }
        let limit = if umax > 0.0 { self.grid.h() / (4.0 * umax) } else { f64::INFINITY };
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::input(format!("time step {dt} violates the CFL bound; admissible dt <= {limit:.6e}")));
        }
        let h = 0.5 * dt;
        let a: [SpectralField<T>; 3] = n1.map(|s| s.scaled(T::lit(dt)));
        let s2: [SpectralField<T>; 3] = std::array::from_fn(|c| self.factor(&Self::combo(&[(&u[c], 1.0), (&a[c], 0.5)]), h));
        let b = self.nonlinear(&s2).0.map(|s| s.scaled(T::lit(dt)));
        let eu: [SpectralField<T>; 3] = std::array::from_fn(|c| self.factor(&u[c], h));
        let s3: [SpectralField<T>; 3] = std::array::from_fn(|c| Self::combo(&[(&eu[c], 1.0), (&b[c], 0.5)]));
        let cc = self.nonlinear(&s3).0.map(|s| s.scaled(T::lit(dt)));
        let s4: [SpectralField<T>; 3] = std::array::from_fn(|c| {
            Self::combo(&[(&self.factor(&u[c], dt), 1.0), (&self.factor(&cc[c], h), 1.0)])
        });
        let d = self.nonlinear(&s4).0.map(|s| s.scaled(T::lit(dt)));
        let next: [SpectralField<T>; 3] = std::array::from_fn(|c| {
            let ea = self.factor(&a[c], dt);
            let ebc = self.factor(&Self::combo(&[(&b[c], 1.0), (&cc[c], 1.0)]), h);
            Self::combo(&[(&self.factor(&u[c], dt), 1.0), (&ea, 1.0 / 6.0), (&ebc, 2.0 / 6.0), (&d[c], 1.0 / 6.0)])
        });
        let e: f64 = next.iter().map(|s| s.energy().to_f64_lossy()).sum();
        if !e.is_finite() {
            return Err(Error::numerical(format!("solver produced NaN at t = {}", state.t + dt)));
        }
        Ok(SolverState { u_hat: next, t: state.t + dt, nu: self.nu })
    }

    /// ‖div u‖₂ / ‖∇u‖₂ by Parseval.
    pub fn divergence_ratio(&self, u_hat: &[SpectralField<T>; 3]) -> f64 {
        let div = vector::divergence(u_hat).energy().to_f64_lossy();
        let grad = vector::grad_energy(u_hat).to_f64_lossy();
        if grad == 0.0 {
            0.0
        } else {
            (div / grad).sqrt()
        }
    }

    /// Integrates to `t_end` with a step no larger than `dt_max`, adjusted so
    /// that both T/2 and T are hit exactly. Frames are kept every
    /// ⌈T/(64·dt)⌉ steps, plus the midpoint and the end.
    pub fn run(&self, initial: SolverState<T>, t_end: f64, dt_max: f64) -> Result<Trajectory<T>> {
        if !(t_end >= 0.0) {
            return Err(Error::input("final time must be nonnegative"));
        }
        let mut steps = (t_end / dt_max).ceil() as usize;
        steps += steps % 2;
        let dt = if steps == 0 { dt_max } else { t_end / steps as f64 };
        let cadence = ((t_end / (64.0 * dt)).ceil() as usize).max(1);
        let band = DealiasMask::band(self.grid);
        let keep = |s: &SolverState<T>| Frame { t: s.t, u: std::array::from_fn(|c| BandField::from_spectral(&s.u_hat[c], band)) };
        let mut frames = vec![keep(&initial)];
        let mut state = initial;
        let t0 = state.t;
        let mut max_div = self.divergence_ratio(&state.u_hat);
        for s in 1..=steps {
            state = self.step(&state, dt)?;
            state.t = t0 + s as f64 * dt;
            let div = self.divergence_ratio(&state.u_hat);
            max_div = max_div.max(div);
            if div > 1e-10 {
                return Err(Error::numerical(format!("divergence {div:.3e} after step {s}")));
            }
            if s % cadence == 0 || s == steps || 2 * s == steps {
                frames.push(keep(&state));
            }
        }
        Ok(Trajectory { grid: self.grid, nu: self.nu, dt, steps, frames, max_divergence: max_div })
    }

    pub fn velocity(&self, u_hat: &[SpectralField<T>; 3], t: f64) -> VectorField<T> {
        self.fft.inverse_vector(u_hat, t)
    }

    pub fn vorticity(&self, u_hat: &[SpectralField<T>; 3]) -> [SpectralField<T>; 3] {
        vector::curl(u_hat)
    }

    /// ‖Δu + curl ω‖₂ / ‖Δu‖₂.
    pub fn curl_curl_residual(&self, u_hat: &[SpectralField<T>; 3]) -> f64 {
        let lap = vector::laplacian(u_hat);
        let cc = vector::curl(&vector::curl(u_hat));
        let r: [SpectralField<T>; 3] = std::array::from_fn(|c| lap[c].add(&cc[c]));
        let l = vector::energy(&lap).to_f64_lossy();
        if l == 0.0 {
            0.0
        } else {
            (vector::energy(&r).to_f64_lossy() / l).sqrt()
        }
    }
}

/// Exact products on a doubled grid: π = Σ R_iR_j(u_iu_j), the full
/// advection (u·∇)u and the time derivative νΔu − (u·∇)u − ∇π.
pub struct ExactTerms<T> {
    pub fine: GridSpec,
    pub pressure: SpectralField<T>,
    pub advection: [SpectralField<T>; 3],
    pub dudt: [SpectralField<T>; 3],
}

pub fn exact_terms<T: Real>(u_hat: &[SpectralField<T>; 3], nu: f64) -> Result<ExactTerms<T>> {
    let g = u_hat[0].grid;
    let fine = g.refined(2);
    let fft = Fft3::<T>::new(fine);
    let uf: [SpectralField<T>; 3] = std::array::from_fn(|c| u_hat[c].resample(fine.n).expect("refinement"));
    let u: Vec<Vec<T>> = uf.iter().map(|s| fft.inverse(s)).collect();
    let grad: Vec<Vec<Vec<T>>> = uf.iter().map(|s| (0..3).map(|j| fft.inverse(&s.d(j))).collect()).collect();
    let mut press = SpectralField::zeros(fine);
    for i in 0..3 {
        for j in i..3 {
            let p: Vec<T> = u[i].iter().zip(&u[j]).map(|(a, b)| *a * *b).collect();
            let pf = fft.forward(&p);
            let w = if i == j { 1.0 } else { 2.0 };
            let term = pf.multiply(|a, b, c| {
                let k = [fine.kappa(a), fine.kappa(b), fine.kappa(c)];
                let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                if k2 == 0.0 {
                    C::new(T::zero(), T::zero())
                } else {
                    C::new(T::lit(-w * k[i] * k[j] / k2), T::zero())
                }
            });
            press = press.add(&term);
        }
    }
    let advection: [SpectralField<T>; 3] = std::array::from_fn(|i| {
        let a: Vec<T> = (0..fine.len()).map(|p| (0..3).fold(T::zero(), |acc, j| acc + u[j][p] * grad[i][j][p])).collect();
        fft.forward(&a)
    });
    let dudt: [SpectralField<T>; 3] = std::array::from_fn(|i| {
        uf[i].laplacian().scaled(T::lit(nu)).add(&advection[i].scaled(-T::one())).add(&press.d(i).scaled(-T::one()))
    });
    Ok(ExactTerms { fine, pressure: press, advection, dudt })
}

/// Pressure as a grid field on the doubled grid.
pub fn pressure<T: Real>(u_hat: &[SpectralField<T>; 3]) -> Result<ScalarField<T>> {
    let terms = exact_terms(u_hat, 0.0)?;
    Ok(Fft3::new(terms.fine).inverse_scalar(&terms.pressure))
}
