//! No-slip Stokes eigenmodes of the ball B_R in closed form.
//!
//! With S = r^l Y_lm a real solid harmonic and Γ(x) = g_l(k|x|):
//!   toroidal  a = ∇ψ × x,          ψ = Γ S,           k = z_{l,n}/R,
//!   poloidal  a = curl curl(xψ),   ψ = (Γ − Γ(R)) S,  k = z_{l+1,n}/R,
//! where z_{l,n} is the n-th zero of j_l. Both satisfy −Δa + ∇p = k²a with
//! p = 0 (toroidal) or p = −k²Γ(R)(l+1)S (poloidal), div a = 0 and a = 0 on
//! |x| = R.

use crate::ballquad::{product_rule, PointSet};
use crate::bessel::{g, g_ladder, sph_j_zeros};
use crate::error::{Error, Result};
use crate::quadrature::Rule1d;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Homogeneous polynomial in (x, y, z).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    pub terms: Vec<(f64, [u32; 3])>,
}

impl Poly {
    pub fn one() -> Self {
        Poly { terms: vec![(1.0, [0, 0, 0])] }
    }

    fn add_term(&mut self, c: f64, e: [u32; 3]) {
        if c == 0.0 {
            return;
        }
        if let Some(t) = self.terms.iter_mut().find(|t| t.1 == e) {
            t.0 += c;
        } else {
            self.terms.push((c, e));
        }
    }

    pub fn scaled(&self, s: f64) -> Poly {
        Poly { terms: self.terms.iter().map(|(c, e)| (c * s, *e)).collect() }
    }

    pub fn plus(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        for (c, e) in &o.terms {
            out.add_term(*c, *e);
        }
        out.terms.retain(|t| t.0 != 0.0);
        out
    }

    /// Multiplies by x_a.
    pub fn times_var(&self, a: usize) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(c, e)| {
                    let mut e = *e;
                    e[a] += 1;
                    (*c, e)
                })
                .collect(),
        }
    }

    /// Multiplies by |x|².
    pub fn times_r2(&self) -> Poly {
        (0..3).fold(Poly::default(), |acc, a| acc.plus(&self.times_var(a).times_var(a)))
    }

    pub fn d(&self, a: usize) -> Poly {
        let mut out = Poly::default();
        for (c, e) in &self.terms {
            if e[a] > 0 {
                let mut f = *e;
                f[a] -= 1;
                out.add_term(c * e[a] as f64, f);
            }
        }
        out
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.terms.iter().map(|(c, e)| c * x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32)).sum()
    }
}

/// Value, gradient, Hessian and third derivatives of a scalar.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet3 {
    pub v: f64,
    pub g: [f64; 3],
    pub h: [[f64; 3]; 3],
    pub t: [[[f64; 3]; 3]; 3],
}

impl Jet3 {
    pub fn mul(&self, o: &Jet3) -> Jet3 {
        let (f, q) = (self, o);
        let mut out = Jet3 { v: f.v * q.v, ..Jet3::default() };
        for a in 0..3 {
            out.g[a] = f.v * q.g[a] + f.g[a] * q.v;
            for b in 0..3 {
                out.h[a][b] = f.v * q.h[a][b] + f.g[a] * q.g[b] + f.g[b] * q.g[a] + f.h[a][b] * q.v;
                for c in 0..3 {
                    out.t[a][b][c] = f.v * q.t[a][b][c]
                        + f.g[a] * q.h[b][c]
                        + f.g[b] * q.h[a][c]
                        + f.g[c] * q.h[a][b]
                        + f.h[a][b] * q.g[c]
                        + f.h[a][c] * q.g[b]
                        + f.h[b][c] * q.g[a]
                        + f.t[a][b][c] * q.v;
                }
            }
        }
        out
    }

    pub fn axpy(&mut self, s: f64, o: &Jet3) {
        self.v += s * o.v;
        for a in 0..3 {
            self.g[a] += s * o.g[a];
            for b in 0..3 {
                self.h[a][b] += s * o.h[a][b];
                for c in 0..3 {
                    self.t[a][b][c] += s * o.t[a][b][c];
                }
            }
        }
    }
}

/// Jet of x ↦ g_l(k|x|) from the ladder γ_n = g_{l+n}(k|x|).
pub fn radial_jet(x: [f64; 3], k: f64, gam: &[f64; 4]) -> Jet3 {
    let k2 = k * k;
    let k4 = k2 * k2;
    let k6 = k4 * k2;
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut j = Jet3 { v: gam[0], ..Jet3::default() };
    for a in 0..3 {
        j.g[a] = -k2 * x[a] * gam[1];
        for b in 0..3 {
            j.h[a][b] = -k2 * d(a, b) * gam[1] + k4 * x[a] * x[b] * gam[2];
            for c in 0..3 {
                j.t[a][b][c] = k4 * (d(a, b) * x[c] + d(a, c) * x[b] + d(b, c) * x[a]) * gam[2] - k6 * x[a] * x[b] * x[c] * gam[3];
            }
        }
    }
    j
}

/// Real regular solid harmonic r^l P_l^m(cos θ) cos(mφ) (or sin) with its
/// derivatives up to third order stored as polynomials.
#[derive(Clone, Debug)]
pub struct SolidHarmonic {
    pub l: usize,
    pub m: usize,
    pub sine: bool,
    pub poly: Poly,
    d1: [Poly; 3],
    d2: [[Poly; 3]; 3],
    d3: [[[Poly; 3]; 3]; 3],
}

impl SolidHarmonic {
    fn new(l: usize, m: usize, sine: bool, poly: Poly) -> Self {
        let d1: [Poly; 3] = std::array::from_fn(|a| poly.d(a));
        let d2: [[Poly; 3]; 3] = std::array::from_fn(|a| std::array::from_fn(|b| d1[a].d(b)));
        let d3 = std::array::from_fn(|a| std::array::from_fn(|b| std::array::from_fn(|c| d2[a][b].d(c))));
        SolidHarmonic { l, m, sine, poly, d1, d2, d3 }
    }

    /// ∫_{S²} Y² dΩ.
    pub fn sphere_norm2(&self) -> f64 {
        let l = self.l as f64;
        let ratio: f64 = ((self.l - self.m + 1)..=(self.l + self.m)).map(|v| v as f64).product();
        let az = if self.m == 0 { 2.0 * PI } else { PI };
        az * 2.0 / (2.0 * l + 1.0) * ratio
    }

    pub fn jet(&self, x: [f64; 3]) -> Jet3 {
        let mut j = Jet3 { v: self.poly.eval(x), ..Jet3::default() };
        for a in 0..3 {
            j.g[a] = self.d1[a].eval(x);
            for b in 0..3 {
                j.h[a][b] = self.d2[a][b].eval(x);
                for c in 0..3 {
                    j.t[a][b][c] = self.d3[a][b][c].eval(x);
                }
            }
        }
        j
    }
}

/// All real solid harmonics of degree 1..=lmax, ordered by (l, m, cos before sin).
pub fn solid_harmonics(lmax: usize) -> Vec<SolidHarmonic> {
    // c[l][m], s[l][m] by the standard recurrences (no Condon–Shortley phase)
    let mut c = vec![vec![Poly::default(); lmax + 2]; lmax + 2];
    let mut s = vec![vec![Poly::default(); lmax + 2]; lmax + 2];
    c[0][0] = Poly::one();
    for m in 0..=lmax {
        if m > 0 {
            let f = (2 * m - 1) as f64;
            c[m][m] = c[m - 1][m - 1].times_var(0).plus(&s[m - 1][m - 1].times_var(1).scaled(-1.0)).scaled(f);
            s[m][m] = c[m - 1][m - 1].times_var(1).plus(&s[m - 1][m - 1].times_var(0)).scaled(f);
        }
        for l in m..lmax {
            let a = (2 * l + 1) as f64 / (l + 1 - m) as f64;
            let b = (l + m) as f64 / (l + 1 - m) as f64;
            let prev_c = if l > m { c[l - 1][m].times_r2() } else { Poly::default() };
            let prev_s = if l > m { s[l - 1][m].times_r2() } else { Poly::default() };
            c[l + 1][m] = c[l][m].times_var(2).scaled(a).plus(&prev_c.scaled(-b));
            s[l + 1][m] = s[l][m].times_var(2).scaled(a).plus(&prev_s.scaled(-b));
        }
    }
    let mut out = Vec::new();
    for l in 1..=lmax {
        for m in 0..=l {
            out.push(SolidHarmonic::new(l, m, false, c[l][m].clone()));
            if m > 0 {
                out.push(SolidHarmonic::new(l, m, true, s[l][m].clone()));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Toroidal,
    Poloidal,
}

#[derive(Clone, Debug, Serialize)]
pub struct StokesMode {
    pub kind: ModeKind,
    pub l: usize,
    /// Signed order: m ≥ 0 for the cosine harmonic, −m for the sine one.
    pub m: i64,
    pub n: usize,
    pub k: f64,
    pub lambda: f64,
    /// Index into the harmonic list.
    #[serde(skip)]
    pub harmonic: usize,
    /// Γ(R) = g_l(kR), subtracted from Γ in the poloidal potential.
    pub gamma_r: f64,
    /// L²(B_R) normalization factor.
    pub scale: f64,
}

/// a, ∇a (g[i][j] = ∂_j a_i) and ∇p of one mode at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ModeValue {
    pub a: [f64; 3],
    pub da: [[f64; 3]; 3],
    pub gp: [f64; 3],
}

impl StokesMode {
    pub fn eval(&self, x: [f64; 3], s: &SolidHarmonic) -> ModeValue {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let gam = g_ladder(self.l, self.k * r);
        self.eval_with(x, &gam, &s.jet(x))
    }

    /// Evaluation from a precomputed Bessel ladder and harmonic jet.
    pub fn eval_with(&self, x: [f64; 3], gam: &[f64; 4], sj: &Jet3) -> ModeValue {
        let k2 = self.k * self.k;
        let gj = radial_jet(x, self.k, gam);
        let psi_j = gj.mul(sj);
        let mut out = ModeValue::default();
        match self.kind {
            ModeKind::Toroidal => {
                let p = &psi_j;
                let eps = |i: usize, j: usize, k: usize| -> f64 {
                    match (i, j, k) {
                        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
                        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
                        _ => 0.0,
                    }
                };
                for i in 0..3 {
                    for j in 0..3 {
                        for k in 0..3 {
                            let e = eps(i, j, k);
                            if e == 0.0 {
                                continue;
                            }
                            out.a[i] += e * p.g[j] * x[k];
                            for c in 0..3 {
                                out.da[i][c] += e * p.h[j][c] * x[k];
                            }
                            out.da[i][k] += e * p.g[j];
                        }
                    }
                }
            }
            ModeKind::Poloidal => {
                let mut p = psi_j;
                p.axpy(-self.gamma_r, sj);
                for i in 0..3 {
                    let xh: f64 = (0..3).map(|j| x[j] * p.h[i][j]).sum();
                    out.a[i] = 2.0 * p.g[i] + xh + k2 * x[i] * psi_j.v;
                    for c in 0..3 {
                        let xt: f64 = (0..3).map(|j| x[j] * p.t[i][j][c]).sum();
                        out.da[i][c] = 3.0 * p.h[i][c] + xt + k2 * x[i] * psi_j.g[c];
                    }
                    out.da[i][i] += k2 * psi_j.v;
                    out.gp[i] = -k2 * self.gamma_r * (self.l + 1) as f64 * sj.g[i];
                }
            }
        }
        let sc = self.scale;
        for i in 0..3 {
            out.a[i] *= sc;
            out.gp[i] *= sc;
            for c in 0..3 {
                out.da[i][c] *= sc;
            }
        }
        out
    }

    /// ‖a‖²_{L²(B_R)} before scaling, from the radial profile q with
    /// a = q Y x̂ × … (toroidal) or l(l+1)q/r Y x̂ + (rq)′/r ∇_S Y (poloidal).
    fn raw_norm2(&self, radius: f64, s: &SolidHarmonic) -> f64 {
        let l = self.l as f64;
        let ll = l * (l + 1.0);
        let rule = Rule1d::composite(16, 24, 0.0, radius);
        let k = self.k;
        let body = |r: f64| -> f64 {
            let gl = g(self.l, k * r);
            match self.kind {
                ModeKind::Toroidal => {
                    let q = gl * r.powi(self.l as i32);
                    q * q * r * r
                }
                ModeKind::Poloidal => {
                    let dg = -k * k * r * g(self.l + 1, k * r);
                    let q = (gl - self.gamma_r) * r.powi(self.l as i32);
                    let dq = dg * r.powi(self.l as i32) + (gl - self.gamma_r) * l * r.powi(self.l as i32 - 1);
                    let drq = q + r * dq;
                    ll * q * q + drq * drq
                }
            }
        };
        ll * s.sphere_norm2() * rule.integrate(body)
    }
}

/// Validation measurements of one mode.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ModeCheck {
    /// ‖div a‖₂/‖∇a‖₂
    pub divergence: f64,
    /// max |a| on |x| = R
    pub trace: f64,
    /// ‖Δa + λa − ∇p‖₂/(λ‖a‖₂) with Δ by fourth-order differences
    pub eigen_residual: f64,
}

pub const DIVERGENCE_TOL: f64 = 1e-8;
pub const TRACE_TOL: f64 = 1e-8;
pub const EIGEN_TOL: f64 = 1e-6;

impl ModeCheck {
    pub fn passes(&self) -> bool {
        self.divergence <= DIVERGENCE_TOL && self.trace <= TRACE_TOL && self.eigen_residual <= EIGEN_TOL
    }
}

#[derive(Clone, Debug)]
pub struct StokesBasis {
    pub radius: f64,
    pub l_max: usize,
    pub n_max: usize,
    pub harmonics: Vec<SolidHarmonic>,
    pub modes: Vec<StokesMode>,
    pub checks: Vec<ModeCheck>,
}

pub const MAX_MODES: usize = 512;

impl StokesBasis {
    /// Toroidal and poloidal modes with 1 ≤ l ≤ l_max and 1 ≤ n ≤ n_max,
    /// ordered by eigenvalue; every mode is validated before acceptance.
    pub fn build(radius: f64, l_max: usize, n_max: usize) -> Result<Self> {
        if l_max == 0 || n_max == 0 {
            return Err(Error::input("l_max and n_max must be at least 1"));
        }
        let count = 2 * n_max * (l_max * (l_max + 2));
        if count > MAX_MODES {
            return Err(Error::input(format!("{count} modes exceed the limit {MAX_MODES}")));
        }
        if !(radius > 0.0) {
            return Err(Error::input("radius must be positive"));
        }
        let harmonics = solid_harmonics(l_max);
        let mut modes = Vec::with_capacity(count);
        for l in 1..=l_max {
            let zt = sph_j_zeros(l, n_max);
            let zp = sph_j_zeros(l + 1, n_max);
            for (kind, zs) in [(ModeKind::Toroidal, &zt), (ModeKind::Poloidal, &zp)] {
                for (ni, z) in zs.iter().enumerate() {
                    let k = z / radius;
                    for (hi, h) in harmonics.iter().enumerate().filter(|(_, h)| h.l == l) {
                        let gamma_r = if kind == ModeKind::Poloidal { g(l, z.to_owned()) } else { 0.0 };
                        let mut mode = StokesMode {
                            kind,
                            l,
                            m: if h.sine { -(h.m as i64) } else { h.m as i64 },
                            n: ni + 1,
                            k,
                            lambda: k * k,
                            harmonic: hi,
                            gamma_r,
                            scale: 1.0,
                        };
                        mode.scale = 1.0 / mode.raw_norm2(radius, h).sqrt();
                        modes.push(mode);
                    }
                }
            }
        }
        modes.sort_by(|a, b| {
            a.lambda
                .total_cmp(&b.lambda)
                .then((a.kind as u8).cmp(&(b.kind as u8)))
                .then(a.l.cmp(&b.l))
                .then(a.m.cmp(&b.m))
        });
        let mut basis = StokesBasis { radius, l_max, n_max, harmonics, modes, checks: Vec::new() };
        basis.checks = basis.validate();
        let bad: Vec<String> = basis
            .modes
            .iter()
            .zip(&basis.checks)
            .filter(|(_, c)| !c.passes())
            .map(|(m, c)| format!("{:?} l={} m={} n={}: {:?}", m.kind, m.l, m.m, m.n, c))
            .collect();
        if !bad.is_empty() {
            return Err(Error::numerical(format!("rejected Stokes modes: {}", bad.join("; "))));
        }
        Ok(basis)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.modes.iter().map(|m| m.lambda).collect()
    }

    pub fn eval(&self, i: usize, x: [f64; 3]) -> ModeValue {
        let m = &self.modes[i];
        m.eval(x, &self.harmonics[m.harmonic])
    }

    /// Every mode at one point; harmonic jets are shared.
    pub fn eval_all(&self, x: [f64; 3], out: &mut [ModeValue]) {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let jets: Vec<Jet3> = self.harmonics.iter().map(|h| h.jet(x)).collect();
        for (m, o) in self.modes.iter().zip(out.iter_mut()) {
            let gam = g_ladder(m.l, m.k * r);
            *o = m.eval_with(x, &gam, &jets[m.harmonic]);
        }
    }

    fn validate(&self) -> Vec<ModeCheck> {
        let rule = product_rule(0.0, self.radius, 6, 6);
        let boundary = product_rule(self.radius, self.radius, 1, 8);
        (0..self.len()).into_par_iter().map(|i| self.check_mode(i, &rule, &boundary)).collect()
    }

    fn check_mode(&self, i: usize, rule: &PointSet, boundary: &PointSet) -> ModeCheck {
        let m = &self.modes[i];
        let h = 0.02 / m.k;
        let (mut div2, mut grad2, mut res2, mut a2) = (0.0, 0.0, 0.0, 0.0);
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            let v = self.eval(i, *x);
            let div = v.da[0][0] + v.da[1][1] + v.da[2][2];
            div2 += w * div * div;
            grad2 += w * v.da.iter().flatten().map(|d| d * d).sum::<f64>();
            let mut lap = [0.0; 3];
            for d in 0..3 {
                let at = |s: f64| {
                    let mut y = *x;
                    y[d] += s * h;
                    self.eval(i, y).a
                };
                let (p1, m1, p2, m2) = (at(1.0), at(-1.0), at(2.0), at(-2.0));
                for c in 0..3 {
                    lap[c] += (-p2[c] + 16.0 * p1[c] - 30.0 * v.a[c] + 16.0 * m1[c] - m2[c]) / (12.0 * h * h);
                }
            }
            for c in 0..3 {
                let e = lap[c] + m.lambda * v.a[c] - v.gp[c];
                res2 += w * e * e;
                a2 += w * v.a[c] * v.a[c];
            }
        }
        let trace = boundary.points.iter().map(|x| self.eval(i, *x).a.iter().map(|v| v.abs()).fold(0.0, f64::max)).fold(0.0, f64::max);
        ModeCheck { divergence: (div2 / grad2).sqrt(), trace, eigen_residual: (res2 / a2).sqrt() / m.lambda }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonics_are_harmonic() {
        for h in solid_harmonics(5) {
            let lap = (0..3).fold(Poly::default(), |acc, a| acc.plus(&h.poly.d(a).d(a)));
            let x = [0.3, -0.7, 0.55];
            assert!(lap.eval(x).abs() < 1e-10, "l={} m={}", h.l, h.m);
            assert!(h.poly.terms.iter().all(|t| t.1.iter().sum::<u32>() as usize == h.l));
        }
    }

    #[test]
    fn harmonic_norms_match_quadrature() {
        let rule = crate::ballquad::product_rule_radial(&Rule1d { nodes: vec![1.0], weights: vec![1.0] }, 10);
        for h in solid_harmonics(4) {
            let q: f64 = rule.points.iter().zip(&rule.weights).map(|(x, w)| w * h.poly.eval(*x).powi(2)).sum();
            assert!((q - h.sphere_norm2()).abs() < 1e-10 * q, "l={} m={} {q} {}", h.l, h.m, h.sphere_norm2());
        }
    }

    #[test]
    fn small_basis_is_orthonormal() {
        let b = StokesBasis::build(4.0, 2, 2).unwrap();
        assert_eq!(b.len(), 32);
        let rule = product_rule(0.0, 4.0, 40, 10);
        let vals: Vec<Vec<ModeValue>> = rule
            .points
            .iter()
            .map(|x| {
                let mut o = vec![ModeValue::default(); b.len()];
                b.eval_all(*x, &mut o);
                o
            })
            .collect();
        let mut worst: f64 = 0.0;
        for i in 0..b.len() {
            for j in 0..b.len() {
                let gij: f64 = vals.iter().zip(&rule.weights).map(|(v, w)| w * (0..3).map(|c| v[i].a[c] * v[j].a[c]).sum::<f64>()).sum();
                worst = worst.max((gij - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        assert!(worst < 1e-9, "{worst}");
        for c in &b.checks {
            assert!(c.passes(), "{c:?}");
        }
        let z = 4.493409457909064;
        assert!((b.modes[0].lambda - (z / 4.0f64).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn jet3_product_matches_differences() {
        let h = &solid_harmonics(3)[7];
        let k = 2.3;
        let f = |x: [f64; 3]| {
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            radial_jet(x, k, &g_ladder(2, k * r)).mul(&h.jet(x))
        };
        let x = [0.4, 0.3, -0.5];
        let j = f(x);
        let e = 1e-5;
        for c in 0..3 {
            let mut p = x;
            p[c] += e;
            let mut m = x;
            m[c] -= e;
            let (jp, jm) = (f(p), f(m));
            assert!(((jp.v - jm.v) / (2.0 * e) - j.g[c]).abs() < 1e-7);
            for a in 0..3 {
                for b in 0..3 {
                    assert!(((jp.h[a][b] - jm.h[a][b]) / (2.0 * e) - j.t[a][b][c]).abs() < 1e-6);
                }
            }
        }
    }
}
