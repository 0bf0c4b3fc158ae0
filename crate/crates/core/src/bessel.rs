//! Spherical Bessel functions j_l, the entire functions g_l(z) = j_l(z)/z^l,
//! and the positive zeros of j_l.

/// j_0(z), …, j_{lmax}(z) for z > 0 by downward recurrence, normalized
/// against the closed forms of j_0 or j_1.
pub fn sph_j_all(lmax: usize, z: f64) -> Vec<f64> {
    assert!(z > 0.0);
    let start = lmax + z as usize + 32;
    let mut out = vec![0.0; lmax + 1];
    let (mut up, mut cur) = (0.0f64, 1e-300f64);
    for n in (1..=start).rev() {
        let down = (2 * n + 1) as f64 / z * cur - up;
        up = cur;
        cur = down;
        if n - 1 <= lmax {
            out[n - 1] = cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            up *= 1e-250;
            out.iter_mut().for_each(|v| *v *= 1e-250);
        }
    }
    let (v0, v1) = (cur, up);
    let (s, c) = z.sin_cos();
    let j0 = s / z;
    let j1 = s / (z * z) - c / z;
    let scale = if j0.abs() > j1.abs() { j0 / v0 } else { j1 / v1 };
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

pub fn sph_j(l: usize, z: f64) -> f64 {
    if z == 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    if z < 1.0 {
        return g(l, z) * z.powi(l as i32);
    }
    sph_j_all(l, z)[l]
}

/// g_l(z) = j_l(z)/z^l, so that ∂_{x_a} g_l(k|x|) = −k² x_a g_{l+1}(k|x|).
pub fn g(l: usize, z: f64) -> f64 {
    if z < 2.0 {
        // Σ_n (−z²/2)^n / (n! (2l+2n+1)!!)
        let dfact: f64 = (1..=l).map(|i| (2 * i + 1) as f64).product();
        let mut term = 1.0 / dfact;
        let mut sum = term;
        let q = -0.5 * z * z;
        for n in 1..60 {
            term *= q / (n as f64 * (2 * l + 2 * n + 1) as f64);
            sum += term;
            if term.abs() < 1e-18 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        sph_j_all(l, z)[l] / z.powi(l as i32)
    }
}

/// g_l, …, g_{l+3} at z.
pub fn g_ladder(l: usize, z: f64) -> [f64; 4] {
    if z < 2.0 {
        return std::array::from_fn(|n| g(l + n, z));
    }
    let j = sph_j_all(l + 3, z);
    std::array::from_fn(|n| j[l + n] / z.powi((l + n) as i32))
}

/// The first `count` positive zeros of j_l, bracketed on a fine scan and
/// refined by bisection.
pub fn sph_j_zeros(l: usize, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let step = 0.05;
    let mut a = (l as f64).max(step);
    let mut fa = sph_j(l, a);
    while out.len() < count {
        let b = a + step;
        let fb = sph_j(l, b);
        if fa == 0.0 {
            out.push(a);
        } else if fa * fb < 0.0 {
            out.push(bisect(|z| sph_j(l, z), a, b));
        }
        a = b;
        fa = fb;
    }
    out
}

pub fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
