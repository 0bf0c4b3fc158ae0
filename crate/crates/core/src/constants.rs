//! The quantitative constants: M, D, A, the forcing threshold, R_min and g(t).

use crate::diagnostics::weighted_vorticity;
use crate::error::{Error, Result};
use crate::norms::sobolev_norms;
use crate::scalar::Real;
use crate::solver::Trajectory;
use crate::spectral::Fft3;
use serde::Serialize;

/// M = max(1, sup_t ‖u‖_{H⁵} + ‖u‖_{W^{5,∞}}) over the stored frames.
pub fn compute_m<T: Real>(traj: &Trajectory<T>) -> Result<f64> {
    if traj.frames.is_empty() {
        return Err(Error::input("empty trajectory"));
    }
    let fft = Fft3::<T>::new(traj.grid);
    let mut m = 1.0f64;
    for f in &traj.frames {
        let rows = sobolev_norms(&fft, &traj.spectral(f), 5)?;
        let top = rows[5];
        m = m.max(top.h + top.w_inf);
    }
    Ok(m)
}

/// M from precomputed per-time H⁵ and W^{5,∞} norms.
pub fn m_from_norms(rows: &[(f64, f64)]) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::input("no norms given"));
    }
    Ok(rows.iter().fold(1.0, |m, (h, w)| m.max(h + w)))
}

/// A = max_{l ≤ 4} ‖|x|^{a+4} D^l ω₀‖₂².
pub fn compute_a<T: Real>(traj: &Trajectory<T>, a: f64) -> Result<f64> {
    let first = traj.frames.first().ok_or_else(|| Error::input("empty trajectory"))?;
    let fft = Fft3::<T>::new(traj.grid);
    let rows = weighted_vorticity(&fft, &traj.spectral(first), &[a + 4.0], 4)?;
    Ok(rows.iter().map(|r| r.2).fold(0.0, f64::max))
}

/// D = e^{CMT}(4R₀^{2a+8}‖u₀‖²_{H⁵} + M).
pub fn compute_d(m: f64, t: f64, r0: f64, h5_sq: f64, a: f64, c: f64) -> f64 {
    (c * m * t).exp() * (4.0 * r0.powf(2.0 * a + 8.0) * h5_sq + m)
}

/// D = e^{CMT}(A + M).
pub fn compute_d_general(m: f64, t: f64, a_const: f64, c: f64) -> f64 {
    (c * m * t).exp() * (a_const + m)
}

fn check_a(a: f64) -> Result<()> {
    if !(a > 0.0 && a < 1.5) {
        return Err(Error::input(format!("decay rate a = {a} outside (0, 3/2)")));
    }
    Ok(())
}

/// R_min = max(R₀ + 1, C(a)(D² e^{CM⁴T}/M³)^{1/a}).
pub fn compute_r_min(a: f64, m: f64, t: f64, d: f64, c: f64, ca: f64, r0: f64) -> Result<f64> {
    check_a(a)?;
    if m < 1.0 {
        return Err(Error::input(format!("M = {m} below 1")));
    }
    let base = d * d * (c * m.powi(4) * t).exp() / m.powi(3);
    Ok((r0 + 1.0).max(ca * base.powf(1.0 / a)))
}

/// The alternative threshold C(a)(D²/M³)^{−1/a}, reported alongside R_min.
pub fn r_threshold_alt(a: f64, m: f64, d: f64, ca: f64) -> Result<f64> {
    check_a(a)?;
    Ok(ca * (d * d / m.powi(3)).powf(-1.0 / a))
}

/// C N³ e^{−2N⁴C²T}
pub fn epsilon_threshold(n: f64, t: f64, c: f64) -> f64 {
    c * n.powi(3) * (-2.0 * n.powi(4) * c * c * t).exp()
}

/// g(t) = ε²/(N⁴C²)(e^{4N⁴C²t} − 1)
pub fn g_envelope(t: f64, eps: f64, n: f64, c: f64) -> f64 {
    let k = n.powi(4) * c * c;
    eps * eps / k * (4.0 * k * t).exp_m1()
}

/// Largest violation of g′ ≥ C²g³ + C²N⁴g + ε² on `samples` points of [0, T]
/// where g ≤ 1, relative to the right-hand side; zero when it holds.
pub fn g_inequality_defect(t_end: f64, eps: f64, n: f64, c: f64, samples: usize) -> f64 {
    let k = n.powi(4) * c * c;
    (0..samples)
        .map(|i| t_end * i as f64 / (samples - 1).max(1) as f64)
        .filter_map(|t| {
            let g = g_envelope(t, eps, n, c);
            if g > 1.0 {
                return None;
            }
            let dg = 4.0 * eps * eps * (4.0 * k * t).exp();
            let rhs = c * c * g.powi(3) + k * g + eps * eps;
            Some(((rhs - dg) / rhs).max(0.0))
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantsInputs {
    pub a: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "R0")]
    pub r0: f64,
    pub u0_h5: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "C_a")]
    pub ca: f64,
    #[serde(rename = "N")]
    pub n: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantsReport {
    #[serde(rename = "M")]
    pub m: f64,
    #[serde(rename = "A")]
    pub a_const: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "D_general")]
    pub d_general: f64,
    pub epsilon_threshold: f64,
    #[serde(rename = "R_min")]
    pub r_min: f64,
    #[serde(rename = "R_threshold_alt")]
    pub r_threshold_alt: f64,
    pub inputs: ConstantsInputs,
}

impl ConstantsReport {
    pub fn new(m: f64, a_const: f64, inputs: ConstantsInputs) -> Result<Self> {
        let i = &inputs;
        let d = compute_d(m, i.t, i.r0, i.u0_h5 * i.u0_h5, i.a, i.c);
        let r = ConstantsReport {
            m,
            a_const,
            d,
            d_general: compute_d_general(m, i.t, a_const, i.c),
            epsilon_threshold: epsilon_threshold(i.n, i.t, i.c),
            r_min: compute_r_min(i.a, m, i.t, d, i.c, i.ca, i.r0)?,
            r_threshold_alt: r_threshold_alt(i.a, m, d, i.ca)?,
            inputs,
        };
        let vals = [r.m, r.d, r.d_general, r.epsilon_threshold, r.r_min];
        if vals.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::numerical(format!("constants not positive and finite: {vals:?}")));
        }
        Ok(r)
    }
}
