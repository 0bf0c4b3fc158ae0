//! The divergence correction u_c on the annulus: pieces f_l = ψ_l ∇φ·u made
//! mean free along the partition tree, each inverted by the Bogovskii
//! formula on G_l and summed.

use crate::bogovskii::{accumulate, accumulate_value, bump_moments, chord, kernel_moments, AngularRule, BogovskiiQuadrature, Moments, VJet, CHORD_NODES};
use crate::error::{Error, Result};
use crate::flow::{radial_jet, unpack, FlowAt};
use crate::localization::{dot, norm, Bump, Cutoff, Jet, Partition, Transfer};
use crate::quadrature::{gauss_legendre, Rule1d};
use crate::tables::{ShellLattice, ShellTable};
use rayon::prelude::*;

/// Lattice spacing of the source tables.
pub const TABLE_SPACING: f64 = 1.0 / 9.0;
/// Values stored per node and time: u_r, ∇u_r, Δu_r, ∂_t u_r.
pub const PER_TIME: usize = 6;

/// Tabulates the radial velocity jets on the transition shell.
pub fn source_table(flows: &[FlowAt], cutoff: &Cutoff, h: f64) -> ShellTable {
    let lattice = ShellLattice::covering(cutoff.r0, cutoff.r1, h);
    let pos = lattice.positions();
    let nt = flows.len();
    let mut data = vec![0.0; lattice.n_nodes * PER_TIME * nt];
    for (ti, f) in flows.iter().enumerate() {
        let vel = lattice.evaluate(&f.velocity);
        let dudt = lattice.evaluate(&f.dudt);
        data.par_chunks_mut(PER_TIME * nt).enumerate().for_each(|(n, row)| {
            let x = pos[n];
            let pf = unpack(&vel[15 * n..15 * n + 15]);
            let (ur, g, lap) = radial_jet(x, &pf);
            let r = norm(x);
            let dt = (0..3).map(|i| x[i] / r * dudt[3 * n + i]).sum::<f64>();
            row[PER_TIME * ti..PER_TIME * (ti + 1)].copy_from_slice(&[ur, g[0], g[1], g[2], lap, dt]);
        });
    }
    ShellTable::new(lattice, PER_TIME * nt, data)
}

/// g = φ′u_r as a jet, from tabulated radial data.
#[inline]
fn g_jet(x: [f64; 3], r: f64, phi: &[f64; 4], t: &[f64]) -> Jet {
    let n = [x[0] / r, x[1] / r, x[2] / r];
    let ur = t[0];
    let gu = [t[1], t[2], t[3]];
    let dr = dot(n, gu);
    Jet {
        v: phi[1] * ur,
        g: std::array::from_fn(|a| phi[2] * n[a] * ur + phi[1] * gu[a]),
        l: (phi[3] + 2.0 * phi[2] / r) * ur + 2.0 * phi[2] * dr + phi[1] * t[4],
    }
}

/// u_c and ∂_t u_c at one point, per stored time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CorrectionAt {
    pub jets: Vec<VJet>,
    pub dt: Vec<[f64; 3]>,
}

pub struct Correction<'a> {
    pub partition: &'a Partition,
    pub table: ShellTable,
    pub times: Vec<f64>,
    /// ∫ψ_l g per ball and channel; channel 2i is g at time i, 2i+1 its time derivative.
    pub means: Vec<Vec<f64>>,
    pub transfers: Vec<Transfer>,
    bumps: Vec<Vec<(Bump, Vec<f64>)>>,
    pub quad: BogovskiiQuadrature,
    ang: AngularRule,
}

/// Cap rule for ∫_{G_l ∩ {r₀<r<r₁}}: Gauss in r, Gauss in the polar angle
/// about c_l up to the ball edge, trapezoid in azimuth. Offsets are given
/// in the frame whose third axis is ĉ_l.
pub fn cap_rule(cutoff: &Cutoff, centre_radius: f64, rho: f64, nr: usize, na: usize, nb: usize) -> Vec<([f64; 3], f64)> {
    let radial = Rule1d::gauss(nr, cutoff.r0, cutoff.r1);
    let db = std::f64::consts::TAU / nb as f64;
    let mut out = Vec::with_capacity(nr * na * nb);
    for (r, wr) in radial.nodes.iter().zip(&radial.weights) {
        let s = centre_radius;
        let cmax = ((r * r + s * s - rho * rho) / (2.0 * r * s)).clamp(-1.0, 1.0);
        let amax = cmax.acos();
        let ar = Rule1d::gauss(na, 0.0, amax);
        for (a, wa) in ar.nodes.iter().zip(&ar.weights) {
            for j in 0..nb {
                let b = (j as f64 + 0.5) * db;
                out.push(([r * a.sin() * b.cos(), r * a.sin() * b.sin(), r * a.cos()], wr * r * r * wa * a.sin() * db));
            }
        }
    }
    out
}

fn frame(c: [f64; 3]) -> [[f64; 3]; 3] {
    let e3 = {
        let n = norm(c);
        [c[0] / n, c[1] / n, c[2] / n]
    };
    let t = if e3[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = dot(t, e3);
    let e1 = {
        let v = [t[0] - d * e3[0], t[1] - d * e3[1], t[2] - d * e3[2]];
        let n = norm(v);
        [v[0] / n, v[1] / n, v[2] / n]
    };
    let e2 = [e3[1] * e1[2] - e3[2] * e1[1], e3[2] * e1[0] - e3[0] * e1[2], e3[0] * e1[1] - e3[1] * e1[0]];
    [e1, e2, e3]
}

impl<'a> Correction<'a> {
    pub fn new(partition: &'a Partition, flows: &[FlowAt], quad: BogovskiiQuadrature) -> Result<Self> {
        if flows.is_empty() {
            return Err(Error::input("no time levels for the correction"));
        }
        let cutoff = partition.cutoff;
        let table = source_table(flows, &cutoff, TABLE_SPACING);
        let nt = flows.len();
        let nch = 2 * nt;
        let cap = cap_rule(&cutoff, cutoff.r - 0.5, partition.rho, 16, 20, 48);
        let means: Vec<Vec<f64>> = partition
            .centers
            .par_iter()
            .enumerate()
            .map(|(l, c)| {
                let f = frame(*c);
                let mut m = vec![0.0; nch];
                let mut psi = Vec::new();
                let mut vals = vec![0.0; table.nf];
                for (o, w) in &cap {
                    let x: [f64; 3] = std::array::from_fn(|i| o[0] * f[0][i] + o[1] * f[1][i] + o[2] * f[2][i]);
                    partition.psi_values(x, &mut psi);
                    let Some(&(_, p)) = psi.iter().find(|e| e.0 == l) else { continue };
                    if !table.interp(x, &mut vals) {
                        continue;
                    }
                    let d1 = cutoff.radial(norm(x))[1];
                    for ti in 0..nt {
                        m[2 * ti] += w * p * d1 * vals[PER_TIME * ti];
                        m[2 * ti + 1] += w * p * d1 * vals[PER_TIME * ti + 5];
                    }
                }
                m
            })
            .collect();
        let tree = &partition.tree;
        let transfers: Vec<Transfer> = (0..nch).map(|ch| tree.transfer(&means.iter().map(|m| m[ch]).collect::<Vec<_>>())).collect();
        let mut bumps: Vec<Vec<(Bump, Vec<f64>)>> = vec![Vec::new(); partition.len()];
        for (l, list) in bumps.iter_mut().enumerate() {
            for &k in &tree.children[l] {
                list.push((tree.edge_bump[k].unwrap(), transfers.iter().map(|t| t.subtree[k]).collect()));
            }
            if let Some(b) = tree.edge_bump[l] {
                list.push((b, transfers.iter().map(|t| -t.subtree[l]).collect()));
            }
            if l == tree.root {
                list.push((partition.kernels[l], transfers.iter().map(|t| -t.total).collect()));
            }
        }
        Ok(Correction {
            partition,
            table,
            times: flows.iter().map(|f| f.t).collect(),
            means,
            transfers,
            bumps,
            quad,
            ang: AngularRule::new(quad.n_theta),
        })
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    /// The piece f_l at y for channel `ch`, by direct evaluation.
    pub fn piece(&self, l: usize, ch: usize, y: [f64; 3]) -> f64 {
        let mut psi = Vec::new();
        self.partition.psi_values(y, &mut psi);
        let mut v = 0.0;
        if let Some(&(_, p)) = psi.iter().find(|e| e.0 == l) {
            let mut vals = vec![0.0; self.table.nf];
            let r = norm(y);
            let c = self.partition.cutoff;
            if r > c.r0 && r < c.r1 && self.table.interp(y, &mut vals) {
                let ti = ch / 2;
                let idx = PER_TIME * ti + if ch % 2 == 0 { 0 } else { 5 };
                v += p * c.radial(r)[1] * vals[idx];
            }
        }
        for (b, co) in &self.bumps[l] {
            v += co[ch] * b.value(y);
        }
        v
    }

    /// u_c, ∇u_c, Δu_c and ∂_t u_c at x for every stored time.
    pub fn eval(&self, x: [f64; 3]) -> CorrectionAt {
        let nt = self.n_times();
        let nch = 2 * nt;
        let mut out = CorrectionAt { jets: vec![VJet::default(); nt], dt: vec![[0.0; 3]; nt] };
        let part = self.partition;
        let mut balls = Vec::new();
        part.covering_values(x, &mut balls);
        if balls.is_empty() {
            return out;
        }
        let cutoff = part.cutoff;
        let chord_gl = gauss_legendre(CHORD_NODES);
        let panel = gauss_legendre(self.quad.ray_order);
        let mut hs: Vec<Option<Moments>> = vec![None; balls.len()];
        let mut fm: Vec<Moments> = vec![Moments::default(); balls.len() * nch];
        let mut psi = Vec::new();
        let mut vals = vec![0.0; self.table.nf];
        let mut gj = vec![Jet::default(); nt];
        let mut gd = vec![0.0; nt];
        for (theta, w) in self.ang.dirs.iter().zip(&self.ang.weights) {
            let theta = *theta;
            let mut s_max: f64 = 0.0;
            for (bi, (l, _)) in balls.iter().enumerate() {
                hs[bi] = kernel_moments(&part.kernels[*l], x, theta, &chord_gl);
                if hs[bi].is_some() {
                    if let Some((_, e)) = chord(part.centers[*l], part.rho, x, theta) {
                        s_max = s_max.max(e);
                    }
                }
            }
            if hs.iter().all(|h| h.is_none()) {
                continue;
            }
            fm.iter_mut().for_each(|m| *m = Moments::default());
            for (a, b) in shell_intervals(x, theta, cutoff.r0, cutoff.r1, s_max) {
                let ps = (b - a) / self.quad.ray_panels as f64;
                for p in 0..self.quad.ray_panels {
                    let mid = a + (p as f64 + 0.5) * ps;
                    for (t, wt) in panel.0.iter().zip(&panel.1) {
                        let s = mid + 0.5 * ps * t;
                        let ws = 0.5 * ps * wt;
                        let y = [x[0] + s * theta[0], x[1] + s * theta[1], x[2] + s * theta[2]];
                        part.psi_jets(y, &mut psi);
                        if psi.is_empty() || !self.table.interp(y, &mut vals) {
                            continue;
                        }
                        let r = norm(y);
                        let phi = cutoff.radial(r);
                        for ti in 0..nt {
                            gj[ti] = g_jet(y, r, &phi, &vals[PER_TIME * ti..]);
                            gd[ti] = phi[1] * vals[PER_TIME * ti + 5];
                        }
                        for (bi, (l, _)) in balls.iter().enumerate() {
                            if hs[bi].is_none() {
                                continue;
                            }
                            let Some((_, pj)) = psi.iter().find(|e| e.0 == *l) else { continue };
                            for ti in 0..nt {
                                fm[bi * nch + 2 * ti].add_sample(s, ws, &pj.mul(gj[ti]));
                                fm[bi * nch + 2 * ti + 1].add_value(s, ws, pj.v * gd[ti]);
                            }
                        }
                    }
                }
            }
            for (bi, (l, _)) in balls.iter().enumerate() {
                let Some(h) = &hs[bi] else { continue };
                for (bump, co) in &self.bumps[*l] {
                    if let Some(bm) = bump_moments(bump, x, theta, &chord_gl) {
                        for ch in 0..nch {
                            fm[bi * nch + ch].axpy(co[ch], &bm);
                        }
                    }
                }
                for ti in 0..nt {
                    accumulate(&mut out.jets[ti], theta, *w, h, &fm[bi * nch + 2 * ti]);
                    accumulate_value(&mut out.dt[ti], theta, *w, h, &fm[bi * nch + 2 * ti + 1]);
                }
            }
        }
        // u_c = −Σ v_l
        for j in out.jets.iter_mut() {
            let z = *j;
            *j = VJet::default();
            j.axpy(-1.0, &z);
        }
        for d in out.dt.iter_mut() {
            *d = [-d[0], -d[1], -d[2]];
        }
        out
    }

    pub fn eval_many(&self, xs: &[[f64; 3]]) -> Vec<CorrectionAt> {
        xs.par_iter().map(|x| self.eval(*x)).collect()
    }
}

/// Parameter intervals of x + sθ, 0 ≤ s ≤ s_max, with r₀ ≤ |x + sθ| ≤ r₁.
pub fn shell_intervals(x: [f64; 3], theta: [f64; 3], r0: f64, r1: f64, s_max: f64) -> Vec<(f64, f64)> {
    let b = dot(x, theta);
    let xx = dot(x, x);
    let roots = |rad: f64| -> Option<(f64, f64)> {
        let disc = b * b - (xx - rad * rad);
        if disc <= 0.0 {
            None
        } else {
            let q = disc.sqrt();
            Some((-b - q, -b + q))
        }
    };
    let Some((a1, b1)) = roots(r1) else { return Vec::new() };
    let (lo, hi) = (a1.max(0.0), b1.min(s_max));
    if lo >= hi {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(2);
    match roots(r0) {
        None => out.push((lo, hi)),
        Some((a0, b0)) => {
            if a0 > lo {
                out.push((lo, a0.min(hi)));
            }
            if b0 < hi {
                out.push((b0.max(lo), hi));
            }
        }
    }
    out.retain(|(a, b)| b > a);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shell_intervals_match_sampling() {
        let x = [5.4, 0.2, -0.1];
        for theta in [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.6, 0.8], [-0.6, 0.0, 0.8]] {
            let iv = shell_intervals(x, theta, 5.25, 5.75, 1.0);
            for k in 0..1000 {
                let s = k as f64 / 1000.0;
                let r = norm([x[0] + s * theta[0], x[1] + s * theta[1], x[2] + s * theta[2]]);
                let inside = r > 5.25 + 1e-9 && r < 5.75 - 1e-9;
                let listed = iv.iter().any(|(a, b)| s >= *a && s <= *b);
                if inside {
                    assert!(listed, "{theta:?} s={s}");
                }
                if listed {
                    assert!(r >= 5.25 - 1e-9 && r <= 5.75 + 1e-9);
                }
            }
        }
    }

    #[test]
    fn cap_rule_measures_the_lens() {
        let c = Cutoff::new(6.0, 2.0).unwrap();
        let cap = cap_rule(&c, 5.5, 0.49, 16, 12, 24);
        let v: f64 = cap.iter().map(|p| p.1).sum();
        // volume of B_ρ(c) between the spheres r₀, r₁ (all of it lies within ρ of the centre sphere)
        let s: f64 = 5.5;
        let rho: f64 = 0.49;
        let lens = |r: f64| {
            // area of the sphere of radius r inside B_ρ(c)
            let cmax: f64 = (r * r + s * s - rho * rho) / (2.0 * r * s);
            2.0 * std::f64::consts::PI * r * r * (1.0 - cmax.clamp(-1.0, 1.0))
        };
        let exact = Rule1d::composite(16, 64, c.r0, c.r1).integrate(lens);
        assert!((v - exact).abs() < 1e-8 * exact, "{v} {exact}");
    }
}
