//! Forcing residuals F1, F2 of the corrected field r = uφ + u_c, tail norms
//! of the cutoff error, and the R-sweep slope fits.

use crate::bogovskii::VJet;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::flow::{FlowAt, PointFlow};
use crate::grid::GridSpec;
use crate::localization::{Cutoff, Jet};
use crate::reduce;
use crate::spectral::Fft3;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// F1 = −φ(1−φ)(u·∇)u + (φu·∇φ)u + π∇φ − ν(uΔφ + 2(∇φ·∇)u).
pub fn f1_point(f: &PointFlow, pi: f64, phi: &Jet, nu: f64) -> [f64; 3] {
    let adv = f.advection();
    let ug: f64 = (0..3).map(|j| f.u[j] * phi.g[j]).sum();
    std::array::from_fn(|i| {
        let gdu: f64 = (0..3).map(|j| phi.g[j] * f.du[i][j]).sum();
        -phi.v * (1.0 - phi.v) * adv[i] + phi.v * ug * f.u[i] + pi * phi.g[i] - nu * (f.u[i] * phi.l + 2.0 * gdu)
    })
}

/// uφ with its gradient and Laplacian.
pub fn cut_velocity(f: &PointFlow, phi: &Jet) -> VJet {
    let mut out = VJet::default();
    for i in 0..3 {
        out.v[i] = phi.v * f.u[i];
        for j in 0..3 {
            out.g[i][j] = phi.v * f.du[i][j] + f.u[i] * phi.g[j];
        }
        let gdu: f64 = (0..3).map(|j| phi.g[j] * f.du[i][j]).sum();
        out.l[i] = phi.v * f.lap[i] + 2.0 * gdu + f.u[i] * phi.l;
    }
    out
}

/// (a·∇)b for jets, with g[i][j] = ∂_j b_i.
#[inline]
pub fn convect(a: &[f64; 3], b: &VJet) -> [f64; 3] {
    std::array::from_fn(|i| (0..3).map(|j| a[j] * b.g[i][j]).sum())
}

/// F2 = (u_c·∇)(uφ) + (uφ·∇)u_c + (u_c·∇)u_c − νΔu_c + ∂_t u_c.
pub fn f2_point(f: &PointFlow, phi: &Jet, uc: &VJet, uc_t: [f64; 3], nu: f64) -> [f64; 3] {
    let up = cut_velocity(f, phi);
    let a = convect(&uc.v, &up);
    let b = convect(&up.v, uc);
    let c = convect(&uc.v, uc);
    std::array::from_fn(|i| a[i] + b[i] + c[i] - nu * uc.l[i] + uc_t[i])
}

/// r = uφ + u_c with gradient and Laplacian.
pub fn corrected(f: &PointFlow, phi: &Jet, uc: &VJet) -> VJet {
    let mut r = cut_velocity(f, phi);
    r.axpy(1.0, uc);
    r
}

/// Quantity ids of the decay sweep.
pub const QUANTITIES: [&str; 5] = ["F1_L2", "F2_L2", "grad_u_minus_grad_uphi_L2", "pressure_tail_H1", "u_tail_W14"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRecord {
    pub quantity: String,
    #[serde(rename = "R")]
    pub r: f64,
    pub a_target: f64,
    pub t: f64,
    pub value: f64,
}

/// Tail norms of the cutoff error over the whole box.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct TailNorms {
    /// ‖∇u − ∇(uφ)‖₂
    pub grad_u_tail: f64,
    /// ‖∇((1−φ)π)‖₂
    pub pressure_tail: f64,
    /// (‖(1−φ)u‖₄⁴ + ‖∇((1−φ)u)‖₄⁴)^{1/4}
    pub u_tail_w14: f64,
}

/// u, ∇u, π and ∇π of one frame sampled on a refined grid, where every
/// product that enters a tail norm of band-limited data is resolved.
pub struct TailGrid {
    pub grid: GridSpec,
    pub t: f64,
    u: Vec<Vec<f64>>,
    du: Vec<Vec<f64>>,
    p: Vec<f64>,
    dp: Vec<Vec<f64>>,
}

impl TailGrid {
    pub fn new(flow: &FlowAt, factor: usize) -> Result<Self> {
        let grid = flow.velocity.grid.refined(factor);
        let fft = Fft3::<f64>::new(grid);
        if 2 * flow.pressure.band >= grid.n {
            return Err(Error::input(format!("refinement {factor} cannot hold the pressure band")));
        }
        let u = (0..3).map(|c| flow.velocity.field(c).sample(&fft)).collect();
        let du = (3..12).map(|c| flow.velocity.field(c).sample(&fft)).collect();
        let pf = flow.pressure.field(0);
        let p = pf.sample(&fft);
        let dp = (0..3)
            .map(|j| {
                let mut a = [0; 3];
                a[j] = 1;
                pf.derivative(a).sample(&fft)
            })
            .collect();
        Ok(TailGrid { grid, t: flow.t, u, du, p, dp })
    }

    pub fn norms(&self, cutoff: &Cutoff) -> TailNorms {
        let g = self.grid;
        let sums = reduce::sum_range_vec(g.len(), 3, |q, acc| {
            let (i, j, k) = g.unravel(q);
            let x = g.point(i, j, k);
            let phi = cutoff.jet(x);
            let c = 1.0 - phi.v;
            if c == 0.0 {
                return;
            }
            let mut gu2 = 0.0;
            let mut gu4 = 0.0;
            let mut u2 = 0.0;
            for a in 0..3 {
                let ua = self.u[a][q];
                u2 += (c * ua).powi(2);
                for b in 0..3 {
                    let d = c * self.du[3 * a + b][q] - ua * phi.g[b];
                    gu2 += d * d;
                }
            }
            gu4 += gu2 * gu2;
            let mut gp2 = 0.0;
            for b in 0..3 {
                let d = c * self.dp[b][q] - self.p[q] * phi.g[b];
                gp2 += d * d;
            }
            acc[0] += gu2;
            acc[1] += gp2;
            acc[2] += u2 * u2 + gu4;
        });
        let dv = g.cell_volume();
        TailNorms {
            grad_u_tail: (sums[0] * dv).sqrt(),
            pressure_tail: (sums[1] * dv).sqrt(),
            u_tail_w14: (sums[2] * dv).powf(0.25),
        }
    }
}

/// ‖f‖_{L²(|x| > R)} by midpoint quadrature on the grid.
pub fn radial_tail_l2(f: &ScalarField<f64>, r: f64) -> f64 {
    let g = f.grid;
    let s = reduce::sum_range(g.len(), |q| {
        let (i, j, k) = g.unravel(q);
        let x = g.point(i, j, k);
        if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] > r * r {
            f.data[q] * f.data[q]
        } else {
            0.0
        }
    });
    (s * g.cell_volume()).sqrt()
}

/// Least-squares slope of log v against log R. None when fewer than two
/// points are usable or any value is zero or not finite.
pub fn fit_slope(rs: &[f64], vs: &[f64]) -> Option<f64> {
    if rs.len() != vs.len() || rs.len() < 2 {
        return None;
    }
    if vs.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return None;
    }
    let x: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let y: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    /// Slope at the final time; null when undefined.
    #[serde(rename = "slope_T")]
    pub slope_t: Option<f64>,
    #[serde(rename = "slope_T2")]
    pub slope_t2: Option<f64>,
    pub npoints: usize,
}

/// Slopes per quantity at the final time and at half of it.
pub fn fit_slopes(records: &[DecayRecord], t_final: f64) -> Result<BTreeMap<String, SlopeFit>> {
    let mut seen = std::collections::BTreeSet::new();
    for r in records {
        let key = (r.quantity.clone(), r.r.to_bits(), r.t.to_bits());
        if !seen.insert(key) {
            return Err(Error::input(format!("duplicate decay record {} R={} t={}", r.quantity, r.r, r.t)));
        }
    }
    let mut out = BTreeMap::new();
    for q in QUANTITIES {
        let at = |t: f64| -> (Vec<f64>, Vec<f64>) {
            let mut rows: Vec<&DecayRecord> = records.iter().filter(|r| r.quantity == q && (r.t - t).abs() < 1e-12).collect();
            rows.sort_by(|a, b| a.r.total_cmp(&b.r));
            (rows.iter().map(|r| r.r).collect(), rows.iter().map(|r| r.value).collect())
        };
        let (r1, v1) = at(t_final);
        let (r2, v2) = at(0.5 * t_final);
        if r1.is_empty() && r2.is_empty() {
            continue;
        }
        out.insert(q.to_string(), SlopeFit { slope_t: fit_slope(&r1, &v1), slope_t2: fit_slope(&r2, &v2), npoints: r1.len() });
    }
    Ok(out)
}

pub fn write_decay_csv(path: &Path, records: &[DecayRecord]) -> Result<()> {
    let mut s = String::from("quantity,R,a_target,t,value\n");
    for r in records {
        s.push_str(&format!("{},{},{},{},{:e}\n", r.quantity, r.r, r.a_target, r.t, r.value));
    }
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_decay_csv(path: &Path) -> Result<Vec<DecayRecord>> {
    let text = std::fs::read_to_string(path)?;
    let bad = |m: &str| Error::Format { path: path.to_path_buf(), message: m.to_string() };
    let mut lines = text.lines();
    if lines.next() != Some("quantity,R,a_target,t,value") {
        return Err(bad("unexpected header"));
    }
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 5 {
                return Err(bad(&format!("malformed row {l:?}")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad(&format!("bad number {s:?}")));
            Ok(DecayRecord { quantity: f[0].to_string(), r: num(f[1])?, a_target: num(f[2])?, t: num(f[3])?, value: num(f[4])? })
        })
        .collect()
}

pub fn write_slopes_json(path: &Path, slopes: &BTreeMap<String, SlopeFit>) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(slopes)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let rs = [4.0, 6.0, 8.0, 10.0];
        let vs: Vec<f64> = rs.iter().map(|r: &f64| 3.0 * r.powf(-1.7)).collect();
        assert!((fit_slope(&rs, &vs).unwrap() + 1.7).abs() < 1e-12);
        assert_eq!(fit_slope(&rs, &[0.0; 4]), None);
    }

    #[test]
    fn duplicate_records_are_rejected() {
        let r = DecayRecord { quantity: "F1_L2".into(), r: 4.0, a_target: 1.0, t: 0.5, value: 1.0 };
        assert!(fit_slopes(&[r.clone(), r], 0.5).is_err());
    }
}
