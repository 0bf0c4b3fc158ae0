//! Weighted vorticity functionals, the Gronwall fit and the inequality audit.

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::GridSpec;
use crate::norms::{full_derivative_density, multi_indices, weighted_norm, Exponent};
use crate::reduce;
use crate::scalar::Real;
use crate::solver::{exact_terms, Trajectory};
use crate::spectral::{vector, Fft3, SpectralField};
use serde::Serialize;
use std::fmt::Write as _;

/// One row of the diagnostics CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagRow {
    pub t: f64,
    pub kind: String,
    pub l: Option<usize>,
    pub a: Option<f64>,
    pub p: Option<f64>,
    pub value: f64,
}

pub fn rows_to_csv(rows: &[DiagRow]) -> String {
    let opt = |v: Option<String>| v.unwrap_or_default();
    let mut s = String::from("t,kind,l,a,p,value\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.12e}",
            r.t,
            r.kind,
            opt(r.l.map(|v| v.to_string())),
            opt(r.a.map(|v| v.to_string())),
            opt(r.p.map(|v| v.to_string())),
            r.value
        );
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GRow {
    pub t: f64,
    pub l: usize,
    pub a: f64,
    pub value: f64,
}

fn radius_weights(grid: &GridSpec, a: f64) -> Vec<f64> {
    (0..grid.len())
        .map(|q| {
            let (i, j, k) = grid.unravel(q);
            let x = grid.point(i, j, k);
            if a == 0.0 {
                1.0
            } else {
                (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).powf(a)
            }
        })
        .collect()
}

/// G_l(t) = ‖|x|^a D^l ω‖₂² with |D^l ω|² summed over all ordered derivative
/// tuples, by midpoint quadrature on the solver grid.
pub fn weighted_vorticity<T: Real>(fft: &Fft3<T>, u_hat: &[SpectralField<T>; 3], a_list: &[f64], l_max: usize) -> Result<Vec<(usize, f64, f64)>> {
    for &a in a_list {
        if !(0.0..=10.0).contains(&a) {
            return Err(Error::input(format!("weight exponent {a} outside [0, 10]")));
        }
    }
    let g = u_hat[0].grid;
    let omega = vector::curl(u_hat);
    let weights: Vec<Vec<f64>> = a_list.iter().map(|&a| radius_weights(&g, a)).collect();
    let mut out = Vec::new();
    for l in 0..=l_max {
        let dens = full_derivative_density(fft, &omega, l)?;
        for (ai, &a) in a_list.iter().enumerate() {
            let w = &weights[ai];
            let s: f64 = reduce::sum_range(g.len(), |q| w[q] * dens[q]);
            out.push((l, a, s * g.cell_volume()));
        }
    }
    Ok(out)
}

pub fn weighted_vorticity_series<T: Real>(traj: &Trajectory<T>, a_list: &[f64], l_max: usize) -> Result<Vec<GRow>> {
    let fft = Fft3::<T>::new(traj.grid);
    let mut rows = Vec::new();
    for f in &traj.frames {
        let u = traj.spectral(f);
        for (l, a, v) in weighted_vorticity(&fft, &u, a_list, l_max)? {
            rows.push(GRow { t: f.t, l, a, value: v });
        }
    }
    Ok(rows)
}

/// Least C′ ≥ 0 with G(t) ≤ e^{C′Mt}(G(0) + M) at every sample.
pub fn check_gronwall(series: &[(f64, f64)], m: f64) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::input("empty series"));
    }
    if !(m >= 1.0) {
        return Err(Error::input(format!("M must be at least 1, got {m}")));
    }
    let (t0, g0) = series[0];
    let mut c = 0.0f64;
    for &(t, g) in &series[1..] {
        let dt = t - t0;
        if dt <= 0.0 {
            continue;
        }
        let r = (g / (g0 + m)).ln();
        if r > 0.0 {
            c = c.max(r / (m * dt));
        }
    }
    Ok(c)
}

/// Fitted C′ per (l, a) from a G-series.
pub fn gronwall_table(rows: &[GRow], m: f64) -> Result<Vec<(usize, f64, f64)>> {
    let mut keys: Vec<(usize, f64)> = rows.iter().map(|r| (r.l, r.a)).collect();
    keys.sort_by(|x, y| x.partial_cmp(y).unwrap());
    keys.dedup();
    keys.into_iter()
        .map(|(l, a)| {
            let s: Vec<(f64, f64)> = rows.iter().filter(|r| r.l == l && r.a == a).map(|r| (r.t, r.value)).collect();
            Ok((l, a, check_gronwall(&s, m)?))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditRow {
    pub id: String,
    pub a: f64,
    pub p: f64,
    pub l: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub in_range: bool,
}

fn refs<T>(v: &[Vec<T>]) -> Vec<&[T]> {
    v.iter().map(|c| c.as_slice()).collect()
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if lhs == 0.0 && rhs == 0.0 {
        0.0
    } else {
        lhs / rhs
    }
}

/// ‖f‖₁ / (‖f‖₂^{1/2} ‖|x|³ f‖₂^{1/2}).
pub fn grujic_kukavica<T: Real>(f: &ScalarField<T>) -> Result<(f64, f64)> {
    let l1 = weighted_norm(&f.grid, &[&f.data], 0.0, Exponent::Finite(1.0))?;
    let l2 = weighted_norm(&f.grid, &[&f.data], 0.0, Exponent::Finite(2.0))?;
    let w2 = weighted_norm(&f.grid, &[&f.data], 3.0, Exponent::Finite(2.0))?;
    Ok((l1, (l2 * w2).sqrt()))
}

/// Audit of the weighted inequalities at one time. `d_const` is the
/// right-hand side used for the derivative-decay rows.
pub fn audit_inequalities<T: Real>(u_hat: &[SpectralField<T>; 3], nu: f64, a: f64, p: f64, d_const: f64) -> Result<Vec<AuditRow>> {
    let terms = exact_terms(u_hat, nu)?;
    let fine = terms.fine;
    let fft = Fft3::<T>::new(fine);
    let uf: [SpectralField<T>; 3] = std::array::from_fn(|c| u_hat[c].resample(fine.n).expect("refine"));
    let phys = |s: &SpectralField<T>| fft.inverse(s);
    let u: Vec<Vec<T>> = uf.iter().map(phys).collect();
    let grad: Vec<Vec<T>> = (0..9).map(|q| phys(&uf[q / 3].d(q % 3))).collect();
    let om: Vec<Vec<T>> = vector::curl(&uf).iter().map(phys).collect();
    let pr = phys(&terms.pressure);
    let gp: Vec<Vec<T>> = (0..3).map(|j| phys(&terms.pressure.d(j))).collect();
    let ut: Vec<Vec<T>> = terms.dudt.iter().map(phys).collect();
    let lap: Vec<Vec<T>> = vector::laplacian(&uf).iter().map(phys).collect();
    let adv: Vec<Vec<T>> = terms.advection.iter().map(phys).collect();
    let usq: Vec<T> = (0..fine.len()).map(|q| u[0][q] * u[0][q] + u[1][q] * u[1][q] + u[2][q] * u[2][q]).collect();
    let umag: Vec<T> = usq.iter().map(|v| v.sqrt()).collect();
    let gmag: Vec<T> = (0..fine.len()).map(|q| grad.iter().fold(T::zero(), |s, g| s + g[q] * g[q]).sqrt()).collect();
    let ugrad: Vec<T> = umag.iter().zip(&gmag).map(|(a, b)| *a * *b).collect();

    let ex = Exponent::p(p);
    let nrm = |c: &[&[T]], w: f64| weighted_norm(&fine, c, w, ex);
    let pprime = if p == 1.0 { f64::INFINITY } else if p.is_infinite() { 1.0 } else { p / (p - 1.0) };
    let pressure_ok = a < 3.0 / pprime;
    let singular_ok = a < 3.0 / pprime && a > -3.0 / p;
    let mut rows = Vec::new();
    let mut push = |id: &str, l: Option<usize>, lhs: f64, rhs: f64, ok: bool| {
        rows.push(AuditRow { id: id.into(), a, p, l, lhs, rhs, ratio: ratio(lhs, rhs), in_range: ok });
    };

    let lhs = nrm(&refs(&grad), a)?;
    let rhs = nrm(&refs(&om), a)?;
    push("weighted_singular_integral", None, lhs, rhs, singular_ok);

    let ckn_ok = a >= 1.0 && a - 1.0 + 3.0 / p > 0.0;
    let lhs = if a >= 1.0 { nrm(&refs(&u), a - 1.0)? } else { f64::NAN };
    let rhs = nrm(&refs(&grad), a)?;
    push("ckn", None, lhs, rhs, ckn_ok);

    let (l1, gk) = grujic_kukavica(&ScalarField { grid: fine, data: umag.clone() })?;
    push("grujic_kukavica", None, l1, gk, true);

    let lhs = nrm(&[&pr], a)?;
    let rhs = nrm(&[&usq], a)?;
    push("pressure_decay", None, lhs, rhs, pressure_ok);

    let lhs = nrm(&refs(&gp), a)?;
    let rhs = nrm(&[&ugrad], a)?;
    push("pressure_gradient_decay", None, lhs, rhs, pressure_ok);

    for l in 0..=2usize {
        let mut dens = vec![0.0f64; fine.len()];
        for alpha in multi_indices(l) {
            let w = crate::norms::multinomial(alpha);
            for c in &uf {
                let d = phys(&c.derivative(alpha)?);
                for (s, v) in dens.iter_mut().zip(&d) {
                    *s += w * v.to_f64_lossy().powi(2);
                }
            }
        }
        let mag: Vec<f64> = dens.iter().map(|v| v.sqrt()).collect();
        let lhs = weighted_norm(&fine, &[&mag], a, ex)?;
        push("derivative_decay", Some(l), lhs, d_const, true);
    }

    let two = Exponent::Finite(2.0);
    let lhs = weighted_norm(&fine, &refs(&ut), a, two)?;
    let rhs = nu * weighted_norm(&fine, &refs(&lap), a, two)?
        + weighted_norm(&fine, &refs(&adv), a, two)?
        + weighted_norm(&fine, &refs(&gp), a, two)?;
    push("time_derivative_decay", None, lhs, rhs, true);
    Ok(rows)
}

pub fn audit_to_csv(t: f64, rows: &[AuditRow]) -> String {
    let mut s = String::from("t,id,l,a,p,lhs,rhs,ratio,status\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.12e},{:.12e},{:.12e},{}",
            t,
            r.id,
            r.l.map(|v| v.to_string()).unwrap_or_default(),
            r.a,
            r.p,
            r.lhs,
            r.rhs,
            r.ratio,
            if r.in_range { "ok" } else { "out-of-range" }
        );
    }
    s
}
