//! Point sets for integrals over B_R.

use crate::quadrature::{gauss_legendre, Rule1d};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, Default)]
pub struct PointSet {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
        crate::reduce::sum_range(self.len(), |i| self.weights[i] * f(i))
    }

    pub fn concat(&self, other: &PointSet) -> PointSet {
        PointSet { points: [self.points.clone(), other.points.clone()].concat(), weights: [self.weights.clone(), other.weights.clone()].concat() }
    }
}

/// Radial Gauss × Gauss in cos θ × trapezoid in azimuth on the shell a ≤ r ≤ b.
pub fn product_rule(a: f64, b: f64, nr: usize, nt: usize) -> PointSet {
    product_rule_radial(&Rule1d::gauss(nr, a, b), nt)
}

pub fn product_rule_radial(radial: &Rule1d, nt: usize) -> PointSet {
    let (z, wz) = gauss_legendre(nt);
    let np = 2 * nt;
    let dp = std::f64::consts::TAU / np as f64;
    let mut out = PointSet::default();
    for (r, wr) in radial.nodes.iter().zip(&radial.weights) {
        for (c, w) in z.iter().zip(&wz) {
            let s = (1.0 - c * c).sqrt();
            for j in 0..np {
                let p = (j as f64 + 0.5) * dp;
                out.points.push([r * s * p.cos(), r * s * p.sin(), r * c]);
                out.weights.push(wr * r * r * w * dp);
            }
        }
    }
    out
}

/// Uniformly random rotation from a unit quaternion.
pub fn random_rotation(rng: &mut ChaCha8Rng) -> [[f64; 3]; 3] {
    let (u1, u2, u3): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
    let tau = std::f64::consts::TAU;
    let q = [
        (1.0 - u1).sqrt() * (tau * u2).sin(),
        (1.0 - u1).sqrt() * (tau * u2).cos(),
        u1.sqrt() * (tau * u3).sin(),
        u1.sqrt() * (tau * u3).cos(),
    ];
    let (w, x, y, z) = (q[3], q[0], q[1], q[2]);
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - z * w), 2.0 * (x * z + y * w)],
        [2.0 * (x * y + z * w), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - x * w)],
        [2.0 * (x * z - y * w), 2.0 * (y * z + x * w), 1.0 - 2.0 * (x * x + y * y)],
    ]
}

/// Layer counts of a [`BallRule`].
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BallRuleSpec {
    /// Gauss nodes in r on [0, R − 1].
    pub inner: usize,
    /// Gauss nodes on [R − 1, r₀], [r₀, r₁], [r₁, R].
    pub shell: [usize; 3],
    /// Gauss nodes in cos θ per layer; the azimuth uses twice as many.
    pub angular: usize,
    pub seed: u64,
}

impl Default for BallRuleSpec {
    fn default() -> Self {
        BallRuleSpec { inner: 32, shell: [6, 10, 6], angular: 12, seed: 11 }
    }
}

/// Quadrature on B_R whose radial panels break at R − 1, r₀ and r₁. Every
/// radial layer carries a product rule on the sphere under its own random
/// rotation. Inner points come first; `shell_start` indexes the first point
/// with r > R − 1.
#[derive(Clone, Debug)]
pub struct BallRule {
    pub radius: f64,
    pub set: PointSet,
    pub radii: Vec<f64>,
    pub shell_start: usize,
}

impl BallRule {
    pub fn new(r: f64, r0: f64, r1: f64, spec: &BallRuleSpec) -> Self {
        let mut radial = vec![Rule1d::gauss(spec.inner, 0.0, r - 1.0)];
        radial.push(Rule1d::gauss(spec.shell[0], r - 1.0, r0));
        radial.push(Rule1d::gauss(spec.shell[1], r0, r1));
        radial.push(Rule1d::gauss(spec.shell[2], r1, r));
        let sphere = product_rule_radial(&Rule1d { nodes: vec![1.0], weights: vec![1.0] }, spec.angular);
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut set = PointSet::default();
        let mut radii = Vec::new();
        let mut shell_start = 0;
        for (li, rule) in radial.iter().enumerate() {
            if li == 1 {
                shell_start = set.len();
            }
            for (rad, wr) in rule.nodes.iter().zip(&rule.weights) {
                let m = random_rotation(&mut rng);
                for (d, wd) in sphere.points.iter().zip(&sphere.weights) {
                    let e: [f64; 3] = std::array::from_fn(|i| m[i][0] * d[0] + m[i][1] * d[1] + m[i][2] * d[2]);
                    set.points.push([rad * e[0], rad * e[1], rad * e[2]]);
                    set.weights.push(wr * rad * rad * wd);
                    radii.push(*rad);
                }
            }
        }
        BallRule { radius: r, set, radii, shell_start }
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    /// The points with r > R − 1.
    pub fn shell(&self) -> &[[f64; 3]] {
        &self.set.points[self.shell_start..]
    }

    pub fn inner(&self) -> &[[f64; 3]] {
        &self.set.points[..self.shell_start]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_volume() {
        let p = product_rule(0.0, 2.0, 6, 4);
        let v: f64 = p.weights.iter().sum();
        assert!((v - 4.0 / 3.0 * std::f64::consts::PI * 8.0).abs() < 1e-12);
    }

    #[test]
    fn rotations_are_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_rotation(&mut rng);
        for i in 0..3 {
            for j in 0..3 {
                let d: f64 = (0..3).map(|k| m[i][k] * m[j][k]).sum();
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn ball_rule_volume_and_harmonics() {
        let b = BallRule::new(6.0, 5.25, 5.75, &BallRuleSpec::default());
        let v: f64 = b.set.weights.iter().sum();
        let exact = 4.0 / 3.0 * std::f64::consts::PI * 216.0;
        assert!((v - exact).abs() < 1e-12 * exact);
        // rotated layers still integrate low-degree polynomials exactly
        let q = b.set.integrate(|i| {
            let x = b.set.points[i];
            x[0] * x[0] * x[1] * x[1] + x[2].powi(4)
        });
        let e = 6f64.powi(7) / 7.0 * 4.0 * std::f64::consts::PI * (1.0 / 15.0 + 1.0 / 5.0);
        assert!((q - e).abs() < 1e-11 * e, "{q} {e}");
        assert!(b.shell().iter().all(|x| (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() > 5.0));
        assert_eq!(b.shell().len(), 22 * 288);
    }
}
