//! Radial cutoff φ, the annulus partition of unity {ψ_l} on balls G_l, and
//! the spanning tree used to make every localized piece mean free.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::GridSpec;
use crate::quadrature::Rule1d;
use crate::smoothstep::{s9_jet, S9_MAX_SLOPE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::VecDeque;

/// Value, gradient and Laplacian of a scalar at a point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; 3],
    pub l: f64,
}

impl Jet {
    pub fn scale(self, s: f64) -> Jet {
        Jet { v: s * self.v, g: [s * self.g[0], s * self.g[1], s * self.g[2]], l: s * self.l }
    }

    pub fn add(self, o: Jet) -> Jet {
        Jet { v: self.v + o.v, g: [self.g[0] + o.g[0], self.g[1] + o.g[1], self.g[2] + o.g[2]], l: self.l + o.l }
    }

    /// Product rule.
    pub fn mul(self, o: Jet) -> Jet {
        let dot = self.g[0] * o.g[0] + self.g[1] * o.g[1] + self.g[2] * o.g[2];
        Jet {
            v: self.v * o.v,
            g: std::array::from_fn(|i| self.v * o.g[i] + o.v * self.g[i]),
            l: self.v * o.l + o.v * self.l + 2.0 * dot,
        }
    }
}

#[inline]
pub fn norm(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

#[inline]
pub fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// φ(x) = S((r₁ − |x|)/(r₁ − r₀)) with [r₀, r₁] = [R − 3/4, R − 1/4].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cutoff {
    pub r: f64,
    pub r0: f64,
    pub r1: f64,
}

impl Cutoff {
    pub fn new(r: f64, support: f64) -> Result<Self> {
        if !(r - support >= 1.0) {
            return Err(Error::input(format!("ball radius {r} must exceed the data support {support} by at least 1")));
        }
        Ok(Cutoff { r, r0: r - 0.75, r1: r - 0.25 })
    }

    pub fn width(&self) -> f64 {
        self.r1 - self.r0
    }

    /// φ and its first three radial derivatives.
    pub fn radial(&self, rad: f64) -> [f64; 4] {
        let w = self.width();
        let j = s9_jet((self.r1 - rad) / w);
        [j[0], -j[1] / w, j[2] / (w * w), -j[3] / (w * w * w)]
    }

    pub fn value(&self, x: [f64; 3]) -> f64 {
        self.radial(norm(x))[0]
    }

    pub fn jet(&self, x: [f64; 3]) -> Jet {
        let r = norm(x);
        let d = self.radial(r);
        if d[1] == 0.0 && d[2] == 0.0 {
            return Jet { v: d[0], ..Jet::default() };
        }
        let g = std::array::from_fn(|i| d[1] * x[i] / r);
        Jet { v: d[0], g, l: d[2] + 2.0 * d[1] / r }
    }

    /// sup|φ′| = sup S′ / (r₁ − r₀).
    pub fn sup_slope(&self) -> f64 {
        S9_MAX_SLOPE / self.width()
    }

    pub fn sample(&self, grid: GridSpec) -> ScalarField<f64> {
        ScalarField::from_fn(grid, |x| self.value(x))
    }
}

/// Unit-mass radial bump S(1 − |x−c|²/b²) / (b³ I) supported in B_b(c).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bump {
    pub center: [f64; 3],
    pub radius: f64,
    scale: f64,
}

/// ∫_{B_1} S(1 − |y|²) dy; the integrand is a polynomial of degree 20 in |y|.
pub fn unit_bump_mass() -> f64 {
    let rule = Rule1d::gauss(16, 0.0, 1.0);
    4.0 * std::f64::consts::PI * rule.integrate(|s| s * s * s9_jet(1.0 - s * s)[0])
}

impl Bump {
    pub fn new(center: [f64; 3], radius: f64) -> Self {
        Bump { center, radius, scale: 1.0 / (radius.powi(3) * unit_bump_mass()) }
    }

    #[inline]
    pub fn value(&self, x: [f64; 3]) -> f64 {
        let d = sub(x, self.center);
        let q = 1.0 - dot(d, d) / (self.radius * self.radius);
        if q <= 0.0 {
            0.0
        } else {
            self.scale * s9_jet(q)[0]
        }
    }

    pub fn jet(&self, x: [f64; 3]) -> Jet {
        let d = sub(x, self.center);
        let b2 = self.radius * self.radius;
        let q = 1.0 - dot(d, d) / b2;
        if q <= 0.0 {
            return Jet::default();
        }
        let s = s9_jet(q);
        let gq: [f64; 3] = std::array::from_fn(|i| -2.0 * d[i] / b2);
        let lq = -6.0 / b2;
        let g2 = dot(gq, gq);
        Jet {
            v: self.scale * s[0],
            g: std::array::from_fn(|i| self.scale * s[1] * gq[i]),
            l: self.scale * (s[2] * g2 + s[1] * lq),
        }
    }
}

/// Bucketed ball lookup: each cell lists the balls meeting it.
#[derive(Clone, Debug)]
struct CellIndex {
    lo: f64,
    cell: f64,
    dim: usize,
    offsets: Vec<u32>,
    items: Vec<u32>,
}

impl CellIndex {
    fn build(centers: &[[f64; 3]], radius: f64, extent: f64, cell: f64) -> Self {
        let lo = -extent;
        let dim = ((2.0 * extent) / cell).ceil() as usize + 1;
        let mut lists: Vec<Vec<u32>> = vec![Vec::new(); dim * dim * dim];
        for (b, c) in centers.iter().enumerate() {
            let span = |a: usize| {
                let l = (((c[a] - radius - lo) / cell).floor().max(0.0)) as usize;
                let h = (((c[a] + radius - lo) / cell).floor() as usize).min(dim - 1);
                (l, h)
            };
            let (sx, sy, sz) = (span(0), span(1), span(2));
            for k in sz.0..=sz.1 {
                for j in sy.0..=sy.1 {
                    for i in sx.0..=sx.1 {
                        // distance from centre to the cell box
                        let bx = [lo + i as f64 * cell, lo + j as f64 * cell, lo + k as f64 * cell];
                        let mut d2 = 0.0;
                        for a in 0..3 {
                            let v = c[a].clamp(bx[a], bx[a] + cell) - c[a];
                            d2 += v * v;
                        }
                        if d2 < radius * radius {
                            lists[i + dim * (j + dim * k)].push(b as u32);
                        }
                    }
                }
            }
        }
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut items = Vec::new();
        offsets.push(0);
        for l in lists {
            items.extend(l);
            offsets.push(items.len() as u32);
        }
        CellIndex { lo, cell, dim, offsets, items }
    }

    #[inline]
    fn candidates(&self, x: [f64; 3]) -> &[u32] {
        let mut idx = [0usize; 3];
        for a in 0..3 {
            let t = ((x[a] - self.lo) / self.cell).floor();
            if t < 0.0 || t >= self.dim as f64 {
                return &[];
            }
            idx[a] = t as usize;
        }
        let c = idx[0] + self.dim * (idx[1] + self.dim * idx[2]);
        &self.items[self.offsets[c] as usize..self.offsets[c + 1] as usize]
    }
}

/// Spanning tree over balls whose centres are closer than ρ. Each non-root
/// ball carries a unit bump on the lens shared with its parent.
#[derive(Clone, Debug)]
pub struct Tree {
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    /// Breadth-first order starting at the root.
    pub order: Vec<usize>,
    pub edge_bump: Vec<Option<Bump>>,
}

/// Subtree sums of per-ball means, and their grand total.
#[derive(Clone, Debug, PartialEq)]
pub struct Transfer {
    pub subtree: Vec<f64>,
    pub total: f64,
}

impl Tree {
    pub fn transfer(&self, means: &[f64]) -> Transfer {
        let mut s = means.to_vec();
        for &b in self.order.iter().rev() {
            if let Some(p) = self.parent[b] {
                s[p] += s[b];
            }
        }
        Transfer { total: s[self.root], subtree: s }
    }
}

#[derive(Clone, Debug)]
pub struct Partition {
    pub cutoff: Cutoff,
    pub rho: f64,
    pub centers: Vec<[f64; 3]>,
    pub overlap_count: usize,
    pub max_neighbours: usize,
    pub max_nn_angle: f64,
    pub tree: Tree,
    /// Unit bump on the half-radius ball of every G_l.
    pub kernels: Vec<Bump>,
    index: CellIndex,
}

/// Points of a Fibonacci lattice on the unit sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let s = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            [s * t.cos(), s * t.sin(), z]
        })
        .collect()
}

/// Largest nearest-neighbour angle of a unit-sphere point set.
pub fn max_nn_angle(points: &[[f64; 3]], guess: f64) -> f64 {
    let mut radius = 2.0 * guess;
    loop {
        let chord = 2.0 * (0.5 * radius).sin();
        let index = CellIndex::build(points, chord, 1.0 + chord, chord.max(0.02));
        let mut worst = 0.0f64;
        let mut complete = true;
        for (a, p) in points.iter().enumerate() {
            let mut best = f64::INFINITY;
            for &b in index.candidates(*p) {
                if b as usize != a {
                    let c = dot(*p, points[b as usize]).clamp(-1.0, 1.0).acos();
                    best = best.min(c);
                }
            }
            if !best.is_finite() || best > radius {
                complete = false;
                break;
            }
            worst = worst.max(best);
        }
        if complete {
            return worst;
        }
        radius *= 2.0;
    }
}

impl Partition {
    pub const RHO: f64 = 0.49;
    pub const SPACING: f64 = 0.35;

    /// Fibonacci centres on |x| = R − 1/2, grown until the nearest-neighbour
    /// angle is at most 0.35/(R − 1/2).
    pub fn build(cutoff: Cutoff) -> Result<Self> {
        let rho = Self::RHO;
        let s = cutoff.r - 0.5;
        let target = Self::SPACING / s;
        let mut n = ((4.0 * std::f64::consts::PI) / (target * target)).ceil() as usize;
        let (dirs, worst) = loop {
            let d = fibonacci_sphere(n);
            let w = max_nn_angle(&d, target);
            if w <= target {
                break (d, w);
            }
            n += (n / 50).max(1);
        };
        let centers: Vec<[f64; 3]> = dirs.iter().map(|d| [s * d[0], s * d[1], s * d[2]]).collect();
        let index = CellIndex::build(&centers, rho, cutoff.r + 1.0, 0.25);
        let adjacency = neighbour_lists(&centers, rho, cutoff.r + 1.0);
        let max_neighbours = neighbour_lists(&centers, 2.0 * rho, cutoff.r + 1.0).iter().map(|v| v.len()).max().unwrap_or(0);

        let l = centers.len();
        let root = 0;
        let mut parent = vec![None; l];
        let mut children = vec![Vec::new(); l];
        let mut seen = vec![false; l];
        let mut order = Vec::with_capacity(l);
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(b) = queue.pop_front() {
            order.push(b);
            for &o in &adjacency[b] {
                if !seen[o] {
                    seen[o] = true;
                    parent[o] = Some(b);
                    children[b].push(o);
                    queue.push_back(o);
                }
            }
        }
        if order.len() != l {
            return Err(Error::numerical(format!("overlap graph is disconnected: reached {} of {l} balls", order.len())));
        }
        let edge_bump = (0..l)
            .map(|b| {
                parent[b].map(|p| {
                    let d = norm(sub(centers[p], centers[b]));
                    let mid = std::array::from_fn(|i| 0.5 * (centers[p][i] + centers[b][i]));
                    Bump::new(mid, 0.9 * (rho - 0.5 * d))
                })
            })
            .collect();
        let kernels = centers.iter().map(|c| Bump::new(*c, 0.5 * rho)).collect();
        let mut part = Partition {
            cutoff,
            rho,
            centers,
            overlap_count: 0,
            max_neighbours,
            max_nn_angle: worst,
            tree: Tree { root, parent, children, order, edge_bump },
            kernels,
            index,
        };
        part.verify_covering()?;
        Ok(part)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Balls containing x, with η_l jets.
    pub fn covering(&self, x: [f64; 3], out: &mut Vec<(usize, Jet)>) {
        out.clear();
        let r2 = self.rho * self.rho;
        for &b in self.index.candidates(x) {
            let d = sub(x, self.centers[b as usize]);
            let dd = dot(d, d);
            if dd < r2 {
                let q = 1.0 - dd / r2;
                let s = s9_jet(q);
                let gq: [f64; 3] = std::array::from_fn(|i| -2.0 * d[i] / r2);
                let jet = Jet {
                    v: s[0],
                    g: std::array::from_fn(|i| s[1] * gq[i]),
                    l: s[2] * dot(gq, gq) + s[1] * (-6.0 / r2),
                };
                out.push((b as usize, jet));
            }
        }
    }

    /// Balls containing x, with η_l values only.
    pub fn covering_values(&self, x: [f64; 3], out: &mut Vec<(usize, f64)>) {
        out.clear();
        let r2 = self.rho * self.rho;
        for &b in self.index.candidates(x) {
            let d = sub(x, self.centers[b as usize]);
            let dd = dot(d, d);
            if dd < r2 {
                out.push((b as usize, s9_jet(1.0 - dd / r2)[0]));
            }
        }
    }

    /// ψ_l = η_l / Σ_m η_m for the balls covering x, with jets.
    pub fn psi_jets(&self, x: [f64; 3], eta: &mut Vec<(usize, Jet)>) {
        self.covering(x, eta);
        let mut s = Jet::default();
        for (_, j) in eta.iter() {
            s = s.add(*j);
        }
        if s.v <= 0.0 {
            eta.clear();
            return;
        }
        let inv = 1.0 / s.v;
        let gs = s.g;
        let gs2 = dot(gs, gs);
        for (_, e) in eta.iter_mut() {
            let ge = e.g;
            let v = e.v * inv;
            let g = std::array::from_fn(|i| (ge[i] - e.v * gs[i] * inv) * inv);
            let l = e.l * inv - 2.0 * dot(ge, gs) * inv * inv - e.v * s.l * inv * inv + 2.0 * e.v * gs2 * inv * inv * inv;
            *e = Jet { v, g, l };
        }
    }

    pub fn psi_values(&self, x: [f64; 3], eta: &mut Vec<(usize, f64)>) {
        self.covering_values(x, eta);
        let s: f64 = eta.iter().map(|e| e.1).sum();
        if s <= 0.0 {
            eta.clear();
            return;
        }
        for e in eta.iter_mut() {
            e.1 /= s;
        }
    }

    pub fn sum_eta(&self, x: [f64; 3]) -> f64 {
        let mut v = Vec::new();
        self.covering_values(x, &mut v);
        v.iter().map(|e| e.1).sum()
    }

    /// Checks Ση ≥ 1e−8 on the transition shell at grid-like and random
    /// points, and records the largest number of balls containing a point.
    fn verify_covering(&mut self) -> Result<()> {
        let c = self.cutoff;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut worst = 0usize;
        let mut buf = Vec::new();
        let n_rand = 20_000;
        for q in 0..n_rand + self.len() {
            let (x, in_shell) = if q < n_rand {
                let r = (rng.gen_range(c.r0.powi(3)..c.r1.powi(3)) as f64).cbrt();
                let z: f64 = rng.gen_range(-1.0..1.0);
                let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let s = (1.0 - z * z).sqrt();
                ([r * s * t.cos(), r * s * t.sin(), r * z], true)
            } else {
                (self.centers[q - n_rand], false)
            };
            self.covering_values(x, &mut buf);
            worst = worst.max(buf.len());
            if in_shell {
                let s: f64 = buf.iter().map(|e| e.1).sum();
                if s < 1e-8 {
                    return Err(Error::numerical(format!("partition fails to cover the transition shell at {x:?}")));
                }
            }
        }
        self.overlap_count = worst;
        Ok(())
    }

    /// Covering check at the nodes of a grid lying in the transition shell.
    pub fn verify_grid(&self, grid: GridSpec) -> Result<()> {
        let c = self.cutoff;
        for p in 0..grid.len() {
            let (i, j, k) = grid.unravel(p);
            let x = grid.point(i, j, k);
            let r = norm(x);
            if r >= c.r0 && r <= c.r1 && self.sum_eta(x) < 1e-8 {
                return Err(Error::numerical(format!("uncovered grid node {x:?}")));
            }
        }
        Ok(())
    }

    pub fn manifest(&self) -> PartitionManifest {
        PartitionManifest {
            r: self.cutoff.r,
            r0: self.cutoff.r0,
            r1: self.cutoff.r1,
            rho: self.rho,
            centers: self.centers.clone(),
            overlap_count: self.overlap_count,
            max_neighbours: self.max_neighbours,
        }
    }
}

fn neighbour_lists(centers: &[[f64; 3]], dist: f64, extent: f64) -> Vec<Vec<usize>> {
    let index = CellIndex::build(centers, dist, extent, dist.max(0.25));
    centers
        .iter()
        .enumerate()
        .map(|(b, c)| {
            let mut v: Vec<usize> = index
                .candidates(*c)
                .iter()
                .map(|&o| o as usize)
                .filter(|&o| o != b && norm(sub(centers[o], *c)) < dist)
                .collect();
            v.sort_unstable();
            v
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionManifest {
    #[serde(rename = "R")]
    pub r: f64,
    pub r0: f64,
    pub r1: f64,
    pub rho: f64,
    pub centers: Vec<[f64; 3]>,
    pub overlap_count: usize,
    pub max_neighbours: usize,
}
