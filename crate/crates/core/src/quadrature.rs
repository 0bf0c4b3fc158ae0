//! Gauss–Legendre rules and small composite helpers.

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let pm1 = if n == 0 { 0.0 } else { p0 };
    let d = n as f64 * (z * p - pm1) / (z * z - 1.0);
    (p, d)
}

/// A 1-D rule on a finite interval.
#[derive(Clone, Debug)]
pub struct Rule1d {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule1d {
    pub fn gauss(n: usize, a: f64, b: f64) -> Self {
        let (x, w) = gauss_legendre(n);
        let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
        Rule1d {
            nodes: x.iter().map(|t| c + r * t).collect(),
            weights: w.iter().map(|wi| r * wi).collect(),
        }
    }

    /// `panels` equal Gauss panels of `per_panel` nodes each.
    pub fn composite(per_panel: usize, panels: usize, a: f64, b: f64) -> Self {
        let (x, w) = gauss_legendre(per_panel);
        let mut nodes = Vec::with_capacity(per_panel * panels);
        let mut weights = Vec::with_capacity(per_panel * panels);
        let width = (b - a) / panels as f64;
        for p in 0..panels {
            let lo = a + p as f64 * width;
            for (t, wt) in x.iter().zip(&w) {
                nodes.push(lo + 0.5 * width * (t + 1.0));
                weights.push(0.5 * width * wt);
            }
        }
        Rule1d { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}
