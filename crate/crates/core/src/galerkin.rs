//! Galerkin solve of the perturbation system on B_R,
//!
//!   ∂_t v − νΔv + (v·∇)v + (v·∇)r + (r·∇)v + ∇π̄ = −F,   v(0) = 0,
//!
//! projected on no-slip Stokes modes:
//!   c_k′ = −νλ_k c_k − Σ c_i c_j B_ij^(k) − Σ_j D_j^(k) c_j + C^(k),
//! with B_ij^(k) = ∫(a_i·∇)a_j·a_k, D_j^(k) = ∫((a_j·∇)r + (r·∇)a_j)·a_k and
//! C^(k) = −∫F·a_k, all by one quadrature on B_R.

use crate::ballquad::PointSet;
use crate::bogovskii::VJet;
use crate::error::{Error, Result};
use crate::stokes::{ModeValue, StokesBasis};
use rayon::prelude::*;
use serde::Serialize;

/// Values per node and mode: a (3), ∇a with ∂_j a_i at 3 + 3i + j (9), ∇p (3).
pub const MODE_FIELDS: usize = 15;

/// Mode values at quadrature nodes, stored as MODE_FIELDS row-major
/// nodes × modes matrices.
pub struct ModeTable {
    pub nodes: usize,
    pub modes: usize,
    vals: Vec<f64>,
}

impl ModeTable {
    pub fn new(basis: &StokesBasis, points: &[[f64; 3]]) -> Self {
        let (nn, nm) = (points.len(), basis.len());
        let per_node: Vec<Vec<ModeValue>> = points
            .par_iter()
            .map(|x| {
                let mut o = vec![ModeValue::default(); nm];
                basis.eval_all(*x, &mut o);
                o
            })
            .collect();
        let mut vals = vec![0.0; MODE_FIELDS * nn * nm];
        for (n, row) in per_node.iter().enumerate() {
            for (m, v) in row.iter().enumerate() {
                for q in 0..3 {
                    vals[(q * nn + n) * nm + m] = v.a[q];
                    vals[((12 + q) * nn + n) * nm + m] = v.gp[q];
                    for j in 0..3 {
                        vals[((3 + 3 * q + j) * nn + n) * nm + m] = v.da[q][j];
                    }
                }
            }
        }
        ModeTable { nodes: nn, modes: nm, vals }
    }

    /// The nodes × modes matrix of field q.
    #[inline]
    pub fn field(&self, q: usize) -> &[f64] {
        let s = self.nodes * self.modes;
        &self.vals[q * s..(q + 1) * s]
    }

    /// y = A_q c over all nodes.
    pub fn apply(&self, q: usize, c: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nodes];
        gemm(self.nodes, self.modes, 1, self.field(q), (self.modes, 1), c, (1, 1), &mut y, (1, 1), 0.0);
        y
    }

    /// out += A_qᵀ y.
    pub fn apply_t(&self, q: usize, y: &[f64], out: &mut [f64]) {
        gemm(self.modes, self.nodes, 1, self.field(q), (1, self.modes), y, (1, 1), out, (1, 1), 1.0);
    }
}

/// C = A·B + beta·C with explicit (row, column) strides.
#[allow(clippy::too_many_arguments)]
fn gemm(m: usize, k: usize, n: usize, a: &[f64], sa: (usize, usize), b: &[f64], sb: (usize, usize), c: &mut [f64], sc: (usize, usize), beta: f64) {
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: strides and extents describe sub-slices of a, b and c.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            sa.0 as isize,
            sa.1 as isize,
            b.as_ptr(),
            sb.0 as isize,
            sb.1 as isize,
            beta,
            c.as_mut_ptr(),
            sc.0 as isize,
            sc.1 as isize,
        );
    }
}

/// r, ∇(u − r) and F at the quadrature nodes for a few stored times.
#[derive(Clone, Debug, Default)]
pub struct BallData {
    pub times: Vec<f64>,
    /// r = uφ + u_c with gradient and Laplacian, per time and node.
    pub r: Vec<Vec<VJet>>,
    /// ∇(u − r) per time and node.
    pub cut_error: Vec<Vec<[[f64; 3]; 3]>>,
    /// F = F1 + F2 per time and node.
    pub f: Vec<Vec<[f64; 3]>>,
}

impl BallData {
    pub fn zero(times: Vec<f64>, nodes: usize) -> Self {
        let nt = times.len();
        BallData {
            times,
            r: vec![vec![VJet::default(); nodes]; nt],
            cut_error: vec![vec![[[0.0; 3]; 3]; nodes]; nt],
            f: vec![vec![[0.0; 3]; nodes]; nt],
        }
    }

    /// Bracketing levels and weight for linear interpolation in time.
    pub fn bracket(&self, t: f64) -> (usize, usize, f64) {
        let ts = &self.times;
        if ts.len() == 1 || t <= ts[0] {
            return (0, 0, 0.0);
        }
        for i in 0..ts.len() - 1 {
            if t <= ts[i + 1] {
                return (i, i + 1, (t - ts[i]) / (ts[i + 1] - ts[i]));
            }
        }
        let l = ts.len() - 1;
        (l, l, 0.0)
    }
}

/// N = max(‖∇r‖₂, ‖∇r‖₄, ‖D²r‖₂, 1) over the stored times, and ε = max ‖F‖₂.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Smallness {
    pub grad_l2: f64,
    pub grad_l4: f64,
    pub hess_l2: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub epsilon: f64,
}

pub fn smallness(data: &BallData, rule: &PointSet) -> Smallness {
    let mut s = Smallness::default();
    for ti in 0..data.times.len() {
        let g2 = |i: usize| data.r[ti][i].g.iter().flatten().map(|v| v * v).sum::<f64>();
        let l2 = rule.integrate(g2).sqrt();
        let l4 = rule.integrate(|i| g2(i).powi(2)).powf(0.25);
        // r vanishes near |x| = R, so ‖D²r‖₂ = ‖Δr‖₂
        let h2 = rule.integrate(|i| data.r[ti][i].l.iter().map(|v| v * v).sum::<f64>()).sqrt();
        let f2 = rule.integrate(|i| data.f[ti][i].iter().map(|v| v * v).sum::<f64>()).sqrt();
        s.grad_l2 = s.grad_l2.max(l2);
        s.grad_l4 = s.grad_l4.max(l4);
        s.hess_l2 = s.hess_l2.max(h2);
        s.epsilon = s.epsilon.max(f2);
    }
    s.n = s.grad_l2.max(s.grad_l4).max(s.hess_l2).max(1.0);
    s
}

pub const BLOWUP: f64 = 1e6;

pub struct Galerkin<'a> {
    pub basis: &'a StokesBasis,
    pub rule: &'a PointSet,
    pub table: ModeTable,
    pub data: &'a BallData,
    pub nu: f64,
    pub lambda: Vec<f64>,
    /// D per stored time, row k column j holding D_j^(k).
    pub d: Vec<Vec<f64>>,
    /// C per stored time.
    pub c: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct GalerkinTrajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub coeffs: Vec<Vec<f64>>,
    /// ‖c‖₂
    pub c_norm: Vec<f64>,
    /// ‖∇v‖₂ = (Σ λ_k c_k²)^{1/2}
    pub grad_v: Vec<f64>,
}

impl GalerkinTrajectory {
    /// Coefficients at a stored step time.
    pub fn at(&self, t: f64) -> Result<&[f64]> {
        let i = self
            .times
            .iter()
            .position(|s| (s - t).abs() <= 0.5 * self.dt)
            .ok_or_else(|| Error::input(format!("no Galerkin state within dt/2 of t = {t}")))?;
        Ok(&self.coeffs[i])
    }
}

impl<'a> Galerkin<'a> {
    pub fn new(basis: &'a StokesBasis, rule: &'a PointSet, data: &'a BallData, nu: f64) -> Result<Self> {
        let nt = data.times.len();
        if nt == 0 || data.r.len() != nt || data.f.len() != nt || data.cut_error.len() != nt {
            return Err(Error::input("ball data needs one entry per stored time"));
        }
        if data.r.iter().any(|v| v.len() != rule.len()) || data.f.iter().any(|v| v.len() != rule.len()) {
            return Err(Error::input("ball data does not match the quadrature"));
        }
        let table = ModeTable::new(basis, &rule.points);
        let mut g = Galerkin { basis, rule, table, data, nu, lambda: basis.lambdas(), d: Vec::new(), c: Vec::new() };
        for ti in 0..data.times.len() {
            g.d.push(g.assemble_d(&data.r[ti]));
            g.c.push(g.assemble_c(&data.f[ti]));
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.table.modes
    }

    /// Multiplies the forcing coefficients C by `s`.
    pub fn scale_forcing(&mut self, s: f64) {
        self.c.iter_mut().flatten().for_each(|v| *v *= s);
    }

    fn weighted(&self, q: usize) -> Vec<f64> {
        let nm = self.n();
        let mut out = self.table.field(q).to_vec();
        out.par_chunks_mut(nm).zip(&self.rule.weights).for_each(|(row, w)| row.iter_mut().for_each(|v| *v *= w));
        out
    }

    /// ∫a_j·a_k.
    pub fn gram(&self) -> Vec<f64> {
        let (nn, nm) = (self.table.nodes, self.n());
        let mut g = vec![0.0; nm * nm];
        for q in 0..3 {
            let wa = self.weighted(q);
            gemm(nm, nn, nm, &wa, (1, nm), self.table.field(q), (nm, 1), &mut g, (nm, 1), 1.0);
        }
        g
    }

    fn assemble_d(&self, r: &[VJet]) -> Vec<f64> {
        let (nn, nm) = (self.table.nodes, self.n());
        let mut d = vec![0.0; nm * nm];
        if r.iter().all(|v| *v == VJet::default()) {
            return d;
        }
        for i in 0..3 {
            // P_i[node][j] = Σ_m a_{j,m} ∂_m r_i + Σ_m r_m ∂_m a_{j,i}
            let mut p = vec![0.0; nn * nm];
            p.par_chunks_mut(nm).enumerate().for_each(|(node, row)| {
                let rv = &r[node];
                for (j, out) in row.iter_mut().enumerate() {
                    let mut s = 0.0;
                    for m in 0..3 {
                        let a = self.table.field(m)[node * nm + j];
                        let da = self.table.field(3 + 3 * i + m)[node * nm + j];
                        s += a * rv.g[i][m] + rv.v[m] * da;
                    }
                    *out = s;
                }
            });
            let wa = self.weighted(i);
            gemm(nm, nn, nm, &wa, (1, nm), &p, (nm, 1), &mut d, (nm, 1), 1.0);
        }
        d
    }

    fn assemble_c(&self, f: &[[f64; 3]]) -> Vec<f64> {
        let nm = self.n();
        let mut c = vec![0.0; nm];
        for q in 0..3 {
            let y: Vec<f64> = f.iter().zip(&self.rule.weights).map(|(v, w)| -w * v[q]).collect();
            self.table.apply_t(q, &y, &mut c);
        }
        c
    }

    /// v and ∇v at every node; ∇v component 3i + j is ∂_j v_i.
    pub fn field(&self, c: &[f64]) -> Vec<Vec<f64>> {
        (0..12).map(|q| self.table.apply(q, c)).collect()
    }

    /// N_k(c) = Σ c_i c_j B_ij^(k) = ∫(v·∇)v·a_k with v = Σ c_i a_i.
    pub fn nonlinear(&self, c: &[f64]) -> Vec<f64> {
        let v = self.field(c);
        let mut out = vec![0.0; self.n()];
        for i in 0..3 {
            let y: Vec<f64> = (0..self.table.nodes)
                .map(|n| self.rule.weights[n] * (0..3).map(|m| v[m][n] * v[3 + 3 * i + m][n]).sum::<f64>())
                .collect();
            self.table.apply_t(i, &y, &mut out);
        }
        out
    }

    /// Σ_j B_ij^(j) = ½∫a_i·∇(Σ_j |a_j|²).
    pub fn trace_b(&self) -> Vec<f64> {
        let (nn, nm) = (self.table.nodes, self.n());
        let mut out = vec![0.0; nm];
        for m in 0..3 {
            let h: Vec<f64> = (0..nn)
                .map(|n| {
                    let mut s = 0.0;
                    for q in 0..3 {
                        let a = &self.table.field(q)[n * nm..(n + 1) * nm];
                        let da = &self.table.field(3 + 3 * q + m)[n * nm..(n + 1) * nm];
                        s += a.iter().zip(da).map(|(x, y)| x * y).sum::<f64>();
                    }
                    self.rule.weights[n] * s
                })
                .collect();
            self.table.apply_t(m, &h, &mut out);
        }
        out
    }

    /// The full tensor B[(i·n + j)·n + k] = B_ij^(k); only for small bases.
    pub fn dense_b(&self) -> Result<Vec<f64>> {
        let (nn, nm) = (self.table.nodes, self.n());
        if nm > 256 {
            return Err(Error::input(format!("dense B requested for {nm} > 256 modes")));
        }
        let mut b = vec![0.0; nm * nm * nm];
        let wa: Vec<Vec<f64>> = (0..3).map(|q| self.weighted(q)).collect();
        for i in 0..nm {
            let slab = &mut b[i * nm * nm..(i + 1) * nm * nm];
            for q in 0..3 {
                // T[node][j] = Σ_m a_{i,m} ∂_m a_{j,q}
                let mut t = vec![0.0; nn * nm];
                t.par_chunks_mut(nm).enumerate().for_each(|(node, row)| {
                    for (j, out) in row.iter_mut().enumerate() {
                        *out = (0..3).map(|m| self.table.field(m)[node * nm + i] * self.table.field(3 + 3 * q + m)[node * nm + j]).sum();
                    }
                });
                // slab[j][k] += Σ_node T[node][j] wa_q[node][k]
                gemm(nm, nn, nm, &t, (1, nm), &wa[q], (nm, 1), slab, (nm, 1), 1.0);
            }
        }
        Ok(b)
    }

    fn interp(&self, set: &[Vec<f64>], t: f64) -> Vec<f64> {
        let (i0, i1, th) = self.data.bracket(t);
        set[i0].iter().zip(&set[i1]).map(|(a, b)| (1.0 - th) * a + th * b).collect()
    }

    /// The right-hand side of the coefficient ODE.
    pub fn rhs(&self, t: f64, c: &[f64]) -> Vec<f64> {
        let nm = self.n();
        let d = self.interp(&self.d, t);
        let cf = self.interp(&self.c, t);
        let nl = if c.iter().all(|v| *v == 0.0) { vec![0.0; nm] } else { self.nonlinear(c) };
        (0..nm)
            .map(|k| {
                let dc: f64 = (0..nm).map(|j| d[k * nm + j] * c[j]).sum();
                -self.nu * self.lambda[k] * c[k] - nl[k] - dc + cf[k]
            })
            .collect()
    }

    /// Classical RK4 from c(0) = c0 with a step no larger than `dt_max`;
    /// the step count is even so that t_end/2 is a step time.
    pub fn integrate(&self, t_end: f64, dt_max: f64, c0: &[f64]) -> Result<GalerkinTrajectory> {
        let lmax = self.lambda.iter().cloned().fold(0.0, f64::max);
        if dt_max > 1.0 / (2.0 * self.nu.max(1e-300) * lmax) + 1e-15 {
            return Err(Error::input(format!("dt {dt_max} exceeds 1/(2νλ_max) = {}", 1.0 / (2.0 * self.nu * lmax))));
        }
        let mut steps = (t_end / dt_max).ceil() as usize;
        steps += steps % 2;
        let steps = steps.max(2);
        let dt = t_end / steps as f64;
        let mut c = c0.to_vec();
        let mut traj = GalerkinTrajectory { dt, ..Default::default() };
        let record = |traj: &mut GalerkinTrajectory, t: f64, c: &[f64]| {
            traj.times.push(t);
            traj.c_norm.push(c.iter().map(|v| v * v).sum::<f64>().sqrt());
            traj.grad_v.push(c.iter().zip(&self.lambda).map(|(v, l)| l * v * v).sum::<f64>().sqrt());
            traj.coeffs.push(c.to_vec());
        };
        record(&mut traj, 0.0, &c);
        for s in 0..steps {
            let t = s as f64 * dt;
            rk4_step(|t, y| self.rhs(t, y), t, dt, &mut c);
            let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm <= BLOWUP) {
                return Err(Error::Divergence(format!("|c| = {norm:e} at t = {:.4}", t + dt)));
            }
            record(&mut traj, (s + 1) as f64 * dt, &c);
        }
        Ok(traj)
    }

    /// ‖∇(u − w)(t)‖_{L²(B_R)} with w = r + v, at a stored data time.
    pub fn transfer_error(&self, traj: &GalerkinTrajectory, t: f64) -> Result<f64> {
        let ti = self
            .data
            .times
            .iter()
            .position(|s| (s - t).abs() <= 0.5 * traj.dt)
            .ok_or_else(|| Error::input(format!("no stored data at t = {t}")))?;
        let c = traj.at(t)?;
        let v = self.field(c);
        let e = &self.data.cut_error[ti];
        Ok(self
            .rule
            .integrate(|n| {
                let mut s = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        let d = e[n][i][j] - v[3 + 3 * i + j][n];
                        s += d * d;
                    }
                }
                s
            })
            .sqrt())
    }

    /// ∇π̄ = −∂_t v + νΔv − (v·∇)v − (v·∇)r − (r·∇)v − F at the nodes, with
    /// ∂_t v from the ODE right-hand side.
    pub fn pressure_gradient(&self, t: f64, c: &[f64]) -> Vec<[f64; 3]> {
        let nn = self.table.nodes;
        let cdot = self.rhs(t, c);
        let lc: Vec<f64> = c.iter().zip(&self.lambda).map(|(a, l)| -l * a).collect();
        let v = self.field(c);
        let (i0, i1, th) = self.data.bracket(t);
        let mut out = vec![[0.0; 3]; nn];
        for i in 0..3 {
            let vt = self.table.apply(i, &cdot);
            let lap_a = self.table.apply(i, &lc);
            let lap_p = self.table.apply(12 + i, c);
            for n in 0..nn {
                let lerp = |a: f64, b: f64| (1.0 - th) * a + th * b;
                let (r0, r1) = (&self.data.r[i0][n], &self.data.r[i1][n]);
                let r: [f64; 3] = std::array::from_fn(|m| lerp(r0.v[m], r1.v[m]));
                let dr: [f64; 3] = std::array::from_fn(|m| lerp(r0.g[i][m], r1.g[i][m]));
                let f = lerp(self.data.f[i0][n][i], self.data.f[i1][n][i]);
                let mut adv = 0.0;
                for m in 0..3 {
                    let dv = v[3 + 3 * i + m][n];
                    adv += v[m][n] * dv + v[m][n] * dr[m] + r[m] * dv;
                }
                out[n][i] = -vt[n] + self.nu * (lap_a[n] + lap_p[n]) - adv - f;
            }
        }
        out
    }

    /// Coefficients of ∫∇π̄·a_k.
    pub fn project(&self, field: &[[f64; 3]]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for q in 0..3 {
            let y: Vec<f64> = field.iter().zip(&self.rule.weights).map(|(v, w)| w * v[q]).collect();
            self.table.apply_t(q, &y, &mut out);
        }
        out
    }

    pub fn l2(&self, field: &[[f64; 3]]) -> f64 {
        self.rule.integrate(|n| field[n].iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// ‖F(t)‖₂ with F interpolated as in the ODE.
    pub fn forcing_l2(&self, t: f64) -> f64 {
        let (i0, i1, th) = self.data.bracket(t);
        self.rule
            .integrate(|n| (0..3).map(|q| ((1.0 - th) * self.data.f[i0][n][q] + th * self.data.f[i1][n][q]).powi(2)).sum::<f64>())
            .sqrt()
    }

    /// ‖∇π̄(t)‖₂ at each step and the largest projection coefficient relative
    /// to the forcing scale.
    pub fn pressure_series(&self, traj: &GalerkinTrajectory) -> PressureSeries {
        let mut out = PressureSeries { times: traj.times.clone(), ..Default::default() };
        for (t, c) in traj.times.iter().zip(&traj.coeffs) {
            let gp = self.pressure_gradient(*t, c);
            let norm = self.l2(&gp);
            let proj = self.project(&gp).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let scale = norm.max(self.forcing_l2(*t));
            out.norms.push(norm);
            out.projection = out.projection.max(if scale > 0.0 { proj / scale } else { proj });
        }
        out
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PressureSeries {
    pub times: Vec<f64>,
    /// ‖∇π̄(t)‖₂
    pub norms: Vec<f64>,
    /// max_k |∫∇π̄·a_k| relative to max(‖∇π̄‖₂, ‖F‖₂), over all steps
    pub projection: f64,
}

impl PressureSeries {
    /// ‖∇π̄‖_{L^p(0, t_i; L²)} for every step time, by the trapezoid rule.
    pub fn lp_in_time(&self, p: f64) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = vec![0.0];
        for i in 1..self.times.len() {
            let h = self.times[i] - self.times[i - 1];
            acc += 0.5 * h * (self.norms[i - 1].powf(p) + self.norms[i].powf(p));
            out.push(acc.powf(1.0 / p));
        }
        out
    }
}

/// One classical RK4 step of y′ = f(t, y).
pub fn rk4_step(f: impl Fn(f64, &[f64]) -> Vec<f64>, t: f64, dt: f64, y: &mut [f64]) {
    let shifted = |k: &[f64], h: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + h * b).collect() };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * dt, &shifted(&k1, 0.5 * dt));
    let k3 = f(t + 0.5 * dt, &shifted(&k2, 0.5 * dt));
    let k4 = f(t + dt, &shifted(&k3, dt));
    for i in 0..y.len() {
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// ε/(N²C)·(e^{4N⁴C²t} − 1)^{1/2}
pub fn envelope(eps: f64, n: f64, c: f64, t: f64) -> f64 {
    let a = 4.0 * n.powi(4) * c * c * t;
    eps / (n * n * c) * a.exp_m1().sqrt()
}

#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeReport {
    pub epsilon: f64,
    #[serde(rename = "N")]
    pub n: f64,
    /// Least C ≥ 1 with ‖∇v(t)‖ under the envelope at every sampled t.
    pub c_fit: Option<f64>,
    /// ε below C N³ e^{−2N⁴C²T} for the fitted C.
    pub small_forcing: bool,
    pub pass: bool,
}

pub const C_SEARCH_MAX: f64 = 1e6;

/// Fits the envelope constant by bisection; the envelope is increasing in C.
pub fn check_envelopes(times: &[f64], grad_v: &[f64], eps: f64, n: f64) -> EnvelopeReport {
    let t_end = times.last().copied().unwrap_or(0.0);
    let holds = |c: f64| times.iter().zip(grad_v).all(|(t, g)| *g <= envelope(eps, n, c, *t) * (1.0 + 1e-12) + 1e-300);
    let c_fit = if holds(1.0) {
        Some(1.0)
    } else {
        let mut hi = 2.0;
        while !holds(hi) && hi < C_SEARCH_MAX {
            hi *= 2.0;
        }
        if !holds(hi) {
            None
        } else {
            let mut lo = hi / 2.0;
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if holds(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(hi)
        }
    };
    let small = c_fit.map(|c| eps < crate::constants::epsilon_threshold(n, t_end, c)).unwrap_or(false);
    EnvelopeReport { epsilon: eps, n, c_fit, small_forcing: small, pass: c_fit.is_some() && small }
}

/// ‖∇π̄‖_{L^p(0,t)} / (t^{1/p} N ε e^{2N⁴C²t}), the largest over t > 0.
pub fn pressure_envelope_ratio(series: &PressureSeries, p: f64, eps: f64, n: f64, c: f64) -> f64 {
    let lp = series.lp_in_time(p);
    series
        .times
        .iter()
        .zip(&lp)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, v)| {
            let den = t.powf(1.0 / p) * n * eps * (2.0 * n.powi(4) * c * c * t).exp();
            if den > 0.0 {
                v / den
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}
