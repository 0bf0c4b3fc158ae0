//! Bogovskii right inverse of the divergence on a ball, in polar form
//!
//!   v(x) = −∫_{S²} θ [H₂F₀ + 2H₁F₁ + H₀F₂] dθ,
//!   H_k = ∫₀^∞ τ^k h(x − τθ) dτ,   F_m = ∫₀^∞ s^m f(x + sθ) ds,
//!
//! where h is a unit-mass bump on a ball B ⊂ G. Derivatives in x fall on
//! H and F separately.

use crate::error::{Error, Result};
use crate::localization::{dot, norm, sub, Bump, Jet};
use crate::quadrature::{gauss_legendre, Rule1d};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BogovskiiQuadrature {
    /// Gauss nodes in cos θ; the azimuth uses twice as many.
    pub n_theta: usize,
    pub ray_panels: usize,
    pub ray_order: usize,
}

impl Default for BogovskiiQuadrature {
    fn default() -> Self {
        BogovskiiQuadrature { n_theta: 14, ray_panels: 4, ray_order: 8 }
    }
}

impl BogovskiiQuadrature {
    /// Rule used for the assembled correction, whose pieces are steeper
    /// than generic sources.
    pub fn correction() -> Self {
        BogovskiiQuadrature { n_theta: 20, ray_panels: 4, ray_order: 8 }
    }

    /// Doubles the rule for the y-integral: directions and ray panels.
    pub fn refined(&self) -> Self {
        BogovskiiQuadrature { n_theta: 2 * self.n_theta, ray_panels: 2 * self.ray_panels, ray_order: self.ray_order }
    }
}

/// Product rule on S²: Gauss–Legendre in cos θ times the trapezoid rule in
/// azimuth.
#[derive(Clone, Debug)]
pub struct AngularRule {
    pub dirs: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl AngularRule {
    pub fn new(n_theta: usize) -> Self {
        let (z, wz) = gauss_legendre(n_theta);
        let n_phi = 2 * n_theta;
        let dphi = std::f64::consts::TAU / n_phi as f64;
        let mut dirs = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        for (c, w) in z.iter().zip(&wz) {
            let s = (1.0 - c * c).sqrt();
            for j in 0..n_phi {
                let p = (j as f64 + 0.5) * dphi;
                dirs.push([s * p.cos(), s * p.sin(), *c]);
                weights.push(w * dphi);
            }
        }
        AngularRule { dirs, weights }
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }
}

/// Parameter interval of {x + sθ : s ≥ 0} inside the open ball.
#[inline]
pub fn chord(center: [f64; 3], radius: f64, x: [f64; 3], theta: [f64; 3]) -> Option<(f64, f64)> {
    let d = sub(x, center);
    let b = dot(d, theta);
    let c = dot(d, d) - radius * radius;
    let disc = b * b - c;
    if disc <= 0.0 {
        return None;
    }
    let q = disc.sqrt();
    let hi = -b + q;
    if hi <= 0.0 {
        return None;
    }
    Some(((-b - q).max(0.0), hi))
}

/// Three scalar moments with their gradients and Laplacians.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub v: [f64; 3],
    pub g: [[f64; 3]; 3],
    pub l: [f64; 3],
}

impl Moments {
    #[inline]
    pub fn add_sample(&mut self, s: f64, w: f64, f: &Jet) {
        let mut p = w;
        for m in 0..3 {
            self.v[m] += p * f.v;
            for a in 0..3 {
                self.g[m][a] += p * f.g[a];
            }
            self.l[m] += p * f.l;
            p *= s;
        }
    }

    #[inline]
    pub fn add_value(&mut self, s: f64, w: f64, f: f64) {
        self.v[0] += w * f;
        self.v[1] += w * s * f;
        self.v[2] += w * s * s * f;
    }

    #[inline]
    pub fn axpy(&mut self, a: f64, o: &Moments) {
        for m in 0..3 {
            self.v[m] += a * o.v[m];
            for b in 0..3 {
                self.g[m][b] += a * o.g[m][b];
            }
            self.l[m] += a * o.l[m];
        }
    }

    pub fn is_zero(&self) -> bool {
        self.v == [0.0; 3] && self.g == [[0.0; 3]; 3] && self.l == [0.0; 3]
    }
}

/// Gauss rule exact for the bump restricted to a line (degree 18) times s².
pub const CHORD_NODES: usize = 12;

/// H_k for the kernel bump along the backward ray, k = 0, 1, 2.
pub fn kernel_moments(kernel: &Bump, x: [f64; 3], theta: [f64; 3], gl: &(Vec<f64>, Vec<f64>)) -> Option<Moments> {
    let back = [-theta[0], -theta[1], -theta[2]];
    let (a, b) = chord(kernel.center, kernel.radius, x, back)?;
    let mut m = Moments::default();
    let (half, mid) = (0.5 * (b - a), 0.5 * (b + a));
    for (t, w) in gl.0.iter().zip(&gl.1) {
        let tau = mid + half * t;
        let y = [x[0] - tau * theta[0], x[1] - tau * theta[1], x[2] - tau * theta[2]];
        m.add_sample(tau, w * half, &kernel.jet(y));
    }
    Some(m)
}

/// Forward moments of a bump source along x + sθ.
pub fn bump_moments(bump: &Bump, x: [f64; 3], theta: [f64; 3], gl: &(Vec<f64>, Vec<f64>)) -> Option<Moments> {
    let (a, b) = chord(bump.center, bump.radius, x, theta)?;
    let mut m = Moments::default();
    let (half, mid) = (0.5 * (b - a), 0.5 * (b + a));
    for (t, w) in gl.0.iter().zip(&gl.1) {
        let s = mid + half * t;
        let y = [x[0] + s * theta[0], x[1] + s * theta[1], x[2] + s * theta[2]];
        m.add_sample(s, w * half, &bump.jet(y));
    }
    Some(m)
}

/// Vector value, Jacobian (g[i][a] = ∂_a v_i) and Laplacian.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VJet {
    pub v: [f64; 3],
    pub g: [[f64; 3]; 3],
    pub l: [f64; 3],
}

impl VJet {
    pub fn div(&self) -> f64 {
        self.g[0][0] + self.g[1][1] + self.g[2][2]
    }

    pub fn axpy(&mut self, a: f64, o: &VJet) {
        for i in 0..3 {
            self.v[i] += a * o.v[i];
            for b in 0..3 {
                self.g[i][b] += a * o.g[i][b];
            }
            self.l[i] += a * o.l[i];
        }
    }
}

/// Adds −wθ[H₂F₀ + 2H₁F₁ + H₀F₂] and its derivatives.
#[inline]
pub fn accumulate(out: &mut VJet, theta: [f64; 3], w: f64, h: &Moments, f: &Moments) {
    let pairs = [(2usize, 0usize, 1.0), (1, 1, 2.0), (0, 2, 1.0)];
    let mut s = 0.0;
    let mut gs = [0.0; 3];
    let mut ls = 0.0;
    for &(k, m, c) in &pairs {
        s += c * h.v[k] * f.v[m];
        for a in 0..3 {
            gs[a] += c * (h.g[k][a] * f.v[m] + h.v[k] * f.g[m][a]);
        }
        ls += c * (h.l[k] * f.v[m] + 2.0 * (h.g[k][0] * f.g[m][0] + h.g[k][1] * f.g[m][1] + h.g[k][2] * f.g[m][2]) + h.v[k] * f.l[m]);
    }
    for i in 0..3 {
        out.v[i] -= w * theta[i] * s;
        for a in 0..3 {
            out.g[i][a] -= w * theta[i] * gs[a];
        }
        out.l[i] -= w * theta[i] * ls;
    }
}

#[inline]
pub fn accumulate_value(out: &mut [f64; 3], theta: [f64; 3], w: f64, h: &Moments, f: &Moments) {
    let s = h.v[2] * f.v[0] + 2.0 * h.v[1] * f.v[1] + h.v[0] * f.v[2];
    for i in 0..3 {
        out[i] -= w * theta[i] * s;
    }
}

/// A ball G = B_ρ(c) with a kernel bump supported in a ball inside G.
#[derive(Clone, Copy, Debug)]
pub struct BallGeometry {
    pub center: [f64; 3],
    pub rho: f64,
    pub kernel: Bump,
}

impl BallGeometry {
    pub fn new(center: [f64; 3], rho: f64, kernel_center: [f64; 3], kernel_radius: f64) -> Result<Self> {
        if norm(sub(kernel_center, center)) + kernel_radius > rho {
            return Err(Error::input("kernel ball must lie inside G"));
        }
        Ok(BallGeometry { center, rho, kernel: Bump::new(kernel_center, kernel_radius) })
    }

    /// Product rule on G. The radial rule breaks at the kernel radius when
    /// the kernel is concentric, so radial polynomial bumps integrate exactly.
    pub fn volume_rule(&self, nr: usize, nt: usize) -> Vec<([f64; 3], f64)> {
        let concentric = norm(sub(self.kernel.center, self.center)) < 1e-14;
        let radial = if concentric {
            let (a, b) = (Rule1d::gauss(nr, 0.0, self.kernel.radius), Rule1d::gauss(nr, self.kernel.radius, self.rho));
            Rule1d { nodes: [a.nodes, b.nodes].concat(), weights: [a.weights, b.weights].concat() }
        } else {
            Rule1d::gauss(nr, 0.0, self.rho)
        };
        let ang = AngularRule::new(nt);
        let mut out = Vec::with_capacity(radial.nodes.len() * ang.len());
        for (r, wr) in radial.nodes.iter().zip(&radial.weights) {
            for (d, wd) in ang.dirs.iter().zip(&ang.weights) {
                out.push(([self.center[0] + r * d[0], self.center[1] + r * d[1], self.center[2] + r * d[2]], wr * r * r * wd));
            }
        }
        out
    }
}

/// div v = f on G for a zero-mean source f supported in G.
pub struct BallProblem<F> {
    pub geometry: BallGeometry,
    pub source: F,
    pub mean: f64,
    pub l1: f64,
}

impl<F: Fn([f64; 3]) -> Jet + Sync> BallProblem<F> {
    pub fn new(geometry: BallGeometry, source: F) -> Result<Self> {
        let rule = geometry.volume_rule(16, 12);
        let (mut mean, mut l1) = (0.0, 0.0);
        for (x, w) in &rule {
            let f = source(*x).v;
            mean += w * f;
            l1 += w * f.abs();
        }
        if mean.abs() > 1e-10 * l1 {
            return Err(Error::input(format!("source mean {mean:e} is not zero (‖f‖₁ = {l1:e})")));
        }
        Ok(BallProblem { geometry, source, mean, l1 })
    }

    /// v, ∇v and Δv at x.
    pub fn solve_at(&self, x: [f64; 3], quad: &BogovskiiQuadrature, ang: &AngularRule) -> VJet {
        let g = &self.geometry;
        let mut out = VJet::default();
        if norm(sub(x, g.center)) >= g.rho {
            return out;
        }
        let chord_gl = gauss_legendre(CHORD_NODES);
        let panel = gauss_legendre(quad.ray_order);
        for (theta, w) in ang.dirs.iter().zip(&ang.weights) {
            let Some(h) = kernel_moments(&g.kernel, x, *theta, &chord_gl) else { continue };
            let Some((_, s_max)) = chord(g.center, g.rho, x, *theta) else { continue };
            let mut f = Moments::default();
            let ps = s_max / quad.ray_panels as f64;
            for p in 0..quad.ray_panels {
                let mid = (p as f64 + 0.5) * ps;
                for (t, wt) in panel.0.iter().zip(&panel.1) {
                    let s = mid + 0.5 * ps * t;
                    let y = [x[0] + s * theta[0], x[1] + s * theta[1], x[2] + s * theta[2]];
                    f.add_sample(s, 0.5 * ps * wt, &(self.source)(y));
                }
            }
            accumulate(&mut out, *theta, *w, &h, &f);
        }
        out
    }
}

/// Relative L² residual ‖div v − f‖₂/‖f‖₂ on the points of a product rule
/// on G.
pub fn divergence_residual<F: Fn([f64; 3]) -> Jet + Sync>(p: &BallProblem<F>, quad: &BogovskiiQuadrature, nr: usize, nt: usize) -> f64 {
    use rayon::prelude::*;
    let ang = AngularRule::new(quad.n_theta);
    let rule = p.geometry.volume_rule(nr, nt);
    let parts: Vec<(f64, f64)> = rule
        .par_iter()
        .map(|(x, w)| {
            let v = p.solve_at(*x, quad, &ang);
            let f = (p.source)(*x).v;
            (w * (v.div() - f).powi(2), w * f * f)
        })
        .collect();
    let (num, den) = parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    (num / den).sqrt()
}

/// Smooth zero-mean source η·p − (∫η·p)·h on a geometry whose kernel is
/// concentric with G: η a bump filling G, p a random cubic polynomial.
pub fn random_zero_mean_source(geometry: &BallGeometry, seed: u64) -> impl Fn([f64; 3]) -> Jet + Sync + Clone {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut exps = Vec::new();
    for a in 0..=3usize {
        for b in 0..=3 - a {
            for c in 0..=3 - a - b {
                exps.push([a, b, c]);
            }
        }
    }
    let mut coeffs = [[[0.0f64; 4]; 4]; 4];
    for e in &exps {
        coeffs[e[0]][e[1]][e[2]] = rng.gen_range(-1.0..1.0);
    }
    let (c, rho) = (geometry.center, geometry.rho);
    let poly = move |x: [f64; 3]| -> Jet {
        let mut p = [[0.0; 4]; 3];
        let mut d = [[0.0; 4]; 3];
        let mut dd = [[0.0; 4]; 3];
        for a in 0..3 {
            let t = (x[a] - c[a]) / rho;
            p[a] = [1.0, t, t * t, t * t * t];
            d[a] = [0.0, 1.0 / rho, 2.0 * t / rho, 3.0 * t * t / rho];
            dd[a] = [0.0, 0.0, 2.0 / (rho * rho), 6.0 * t / (rho * rho)];
        }
        let mut j = Jet::default();
        for e in &exps {
            let co = coeffs[e[0]][e[1]][e[2]];
            let (p0, p1, p2) = (p[0][e[0]], p[1][e[1]], p[2][e[2]]);
            j.v += co * p0 * p1 * p2;
            j.g[0] += co * d[0][e[0]] * p1 * p2;
            j.g[1] += co * p0 * d[1][e[1]] * p2;
            j.g[2] += co * p0 * p1 * d[2][e[2]];
            j.l += co * (dd[0][e[0]] * p1 * p2 + p0 * dd[1][e[1]] * p2 + p0 * p1 * dd[2][e[2]]);
        }
        j
    };
    let eta = Bump::new(c, rho);
    let raw = move |x: [f64; 3]| eta.jet(x).mul(poly(x));
    let mass: f64 = geometry.volume_rule(16, 12).iter().map(|(x, w)| w * raw(*x).v).sum();
    let kernel = geometry.kernel;
    move |x: [f64; 3]| raw(x).add(kernel.jet(x).scale(-mass))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_sources_are_solved() {
        let g = BallGeometry::new([0.0; 3], 2.0, [0.0; 3], 1.0).unwrap();
        let q = BogovskiiQuadrature::default();
        for seed in 0..2 {
            let p = BallProblem::new(g, random_zero_mean_source(&g, seed)).unwrap();
            let e0 = divergence_residual(&p, &q, 4, 4);
            let e1 = divergence_residual(&p, &q.refined(), 4, 4);
            assert!(e0 < 1e-3 && e1 < e0 / 4.0, "{e0} {e1}");
        }
    }

    #[test]
    fn chord_of_unit_ball() {
        let (a, b) = chord([0.0; 3], 1.0, [0.0; 3], [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(a, 0.0);
        assert!((b - 1.0).abs() < 1e-15);
        assert!(chord([0.0; 3], 1.0, [2.0, 0.0, 0.0], [1.0, 0.0, 0.0]).is_none());
        let (a, b) = chord([0.0; 3], 1.0, [-2.0, 0.0, 0.0], [1.0, 0.0, 0.0]).unwrap();
        assert!((a - 1.0).abs() < 1e-15 && (b - 3.0).abs() < 1e-15);
    }

    #[test]
    fn angular_rule_integrates_harmonics() {
        let r = AngularRule::new(6);
        let total: f64 = r.weights.iter().sum();
        assert!((total - 4.0 * std::f64::consts::PI).abs() < 1e-12);
        let z2: f64 = r.dirs.iter().zip(&r.weights).map(|(d, w)| w * d[2] * d[2]).sum();
        assert!((z2 - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn nonzero_mean_is_rejected() {
        let g = BallGeometry::new([0.0; 3], 1.0, [0.0; 3], 0.5).unwrap();
        let k = g.kernel;
        assert!(BallProblem::new(g, move |x| k.jet(x)).is_err());
    }

    #[test]
    fn vanishes_outside_the_ball() {
        let g = BallGeometry::new([0.0; 3], 1.0, [0.0; 3], 0.5).unwrap();
        let eta = Bump::new([0.0; 3], 1.0);
        let p = BallProblem::new(g, move |x| eta.jet(x).mul(Jet { v: x[0], g: [1.0, 0.0, 0.0], l: 0.0 })).unwrap();
        let q = BogovskiiQuadrature::default();
        let ang = AngularRule::new(q.n_theta);
        assert_eq!(p.solve_at([1.2, 0.0, 0.0], &q, &ang), VJet::default());
        assert_eq!(p.solve_at([0.0, -1.01, 0.3], &q, &ang), VJet::default());
    }
}
