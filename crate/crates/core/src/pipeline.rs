//! Stages of the experiment and their artifacts.
//!
//! ```text
//! <out>/r3/         trajectory.bin, diagnostics.csv, initial.json
//! <out>/localize/   R<R>.json (partition and correction checks)
//! <out>/decay/      decay.csv, slopes.json
//! <out>/galerkin/   galerkin.csv, basis_R<R>.json, summary.json
//! <out>/constants/  constants.json
//! <out>/audit/      audit.csv
//! <out>/end-to-end/ summary.json
//! ```
//! Each directory also holds the manifest.json of the stage that wrote it.

use crate::ballquad::BallRule;
use crate::bogovskii::{BogovskiiQuadrature, VJet};
use crate::config::ExperimentConfig;
use crate::constants::{self, ConstantsInputs, ConstantsReport};
use crate::correction::Correction;
use crate::diagnostics::{self, DiagRow};
use crate::error::{Error, Result};
use crate::flow::FlowAt;
use crate::forcing::{self, DecayRecord, SlopeFit, TailGrid};
use crate::galerkin::{self, BallData, EnvelopeReport, Galerkin, Smallness};
use crate::initial::{band_limited_initial_data, ProjectionReport};
use crate::localization::{fibonacci_sphere, Cutoff, Partition};
use crate::norms::sobolev_norms;
use crate::snapshot::{read_trajectory, write_trajectory};
use crate::solver::{NseSolver, Trajectory};
use crate::spectral::Fft3;
use crate::stokes::{ModeCheck, StokesBasis, StokesMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub stage: String,
    pub config_hash: String,
    pub code_version: String,
    pub wall_time_s: f64,
    pub artifacts: Vec<String>,
}

/// Output directory of one stage. Writes go only below it.
pub struct StageDir {
    pub dir: PathBuf,
    stage: String,
    started: Instant,
    written: Vec<String>,
}

impl StageDir {
    pub fn open(root: &Path, stage: &str) -> Result<Self> {
        let dir = root.join(stage);
        std::fs::create_dir_all(&dir)?;
        Ok(StageDir { dir, stage: stage.to_string(), started: Instant::now(), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        std::fs::write(self.path(name), contents)?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json<S: Serialize>(&mut self, name: &str, value: &S) -> Result<()> {
        let s = serde_json::to_string_pretty(value)?;
        self.write(name, s)
    }

    pub fn finish(mut self, cfg: &ExperimentConfig) -> Result<Manifest> {
        let m = Manifest {
            stage: self.stage.clone(),
            config_hash: cfg.hash(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: self.started.elapsed().as_secs_f64(),
            artifacts: std::mem::take(&mut self.written),
        };
        std::fs::write(self.path("manifest.json"), serde_json::to_string_pretty(&m)?)?;
        Ok(m)
    }
}

/// Whole-space stage: the frozen trajectory and the three frames at 0, T/2, T.
pub struct R3 {
    pub traj: Trajectory<f64>,
    pub flows: Vec<FlowAt>,
}

impl R3 {
    pub fn times(&self) -> Vec<f64> {
        self.flows.iter().map(|f| f.t).collect()
    }

    pub fn from_trajectory(traj: Trajectory<f64>, t_end: f64) -> Result<Self> {
        let flows = [0.0, 0.5 * t_end, t_end].iter().map(|t| FlowAt::new(&traj, *t)).collect::<Result<_>>()?;
        Ok(R3 { traj, flows })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct R3Summary {
    pub initial: ProjectionReport,
    pub dt: f64,
    pub steps: usize,
    pub frames: usize,
    pub max_divergence: f64,
}

pub fn solve(cfg: &ExperimentConfig) -> Result<(Trajectory<f64>, ProjectionReport)> {
    let grid = cfg.grid_spec();
    let d = &cfg.data;
    let (u, report) = band_limited_initial_data::<f64>(grid, d.r0, d.seed, d.amplitude, d.oversample, d.smoothing)?;
    let solver = NseSolver::<f64>::new(grid, cfg.physics.nu)?;
    let state = solver.state_from_spectral(u, 0.0);
    let admissible = solver.admissible_dt(&state);
    if cfg.physics.dt > admissible {
        return Err(Error::Config {
            path: "physics.dt".into(),
            message: format!("dt = {} fails the stability precheck at t = 0 (limit {admissible:.4e})", cfg.physics.dt),
        });
    }
    let traj = solver.run(state, cfg.physics.t, cfg.physics.dt)?;
    Ok((traj, report))
}

/// Energy and weighted vorticity per frame.
pub fn r3_diagnostics(traj: &Trajectory<f64>) -> Result<Vec<DiagRow>> {
    let mut rows = Vec::new();
    let fft = Fft3::<f64>::new(traj.grid);
    for f in &traj.frames {
        let u = traj.spectral(f);
        let s = sobolev_norms(&fft, &u, 1)?;
        rows.push(DiagRow { t: f.t, kind: "energy".into(), l: None, a: None, p: None, value: s[0].h * s[0].h });
        rows.push(DiagRow { t: f.t, kind: "h1".into(), l: None, a: None, p: None, value: s[1].h });
    }
    for g in diagnostics::weighted_vorticity_series(traj, &[0.0, 1.0, 2.0], 4)? {
        rows.push(DiagRow { t: g.t, kind: "G".into(), l: Some(g.l), a: Some(g.a), p: None, value: g.value });
    }
    Ok(rows)
}

pub fn run_solve_r3(cfg: &ExperimentConfig, root: &Path) -> Result<R3> {
    let mut st = StageDir::open(root, "r3")?;
    let (traj, report) = solve(cfg)?;
    write_trajectory(&traj, &st.path("trajectory.bin"))?;
    st.written.push("trajectory.bin".into());
    let rows = r3_diagnostics(&traj)?;
    st.write("diagnostics.csv", diagnostics::rows_to_csv(&rows))?;
    let summary = R3Summary { initial: report, dt: traj.dt, steps: traj.steps, frames: traj.frames.len(), max_divergence: traj.max_divergence };
    st.write_json("initial.json", &summary)?;
    st.finish(cfg)?;
    R3::from_trajectory(traj, cfg.physics.t)
}

pub fn load_r3(cfg: &ExperimentConfig, root: &Path) -> Result<R3> {
    let traj = read_trajectory(&root.join("r3").join("trajectory.bin"))?;
    let want = cfg.grid_spec();
    if traj.grid != want || (traj.final_time() - cfg.physics.t).abs() > 0.5 * traj.dt {
        return Err(Error::input("stored trajectory does not match the configuration; rerun solve-r3"));
    }
    R3::from_trajectory(traj, cfg.physics.t)
}

/// Localization on one ball: cutoff, partition, correction and the fields r
/// and F at the ball quadrature.
pub struct Ball {
    pub r: f64,
    pub cutoff: Cutoff,
    pub rule: BallRule,
    pub data: BallData,
    pub report: BallReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct BallReport {
    #[serde(rename = "R")]
    pub r: f64,
    pub r0: f64,
    pub r1: f64,
    pub pieces: usize,
    pub overlap_count: usize,
    pub max_neighbours: usize,
    pub quadrature_nodes: usize,
    pub times: Vec<f64>,
    /// ‖div(uφ + u_c)‖₂ / ‖∇φ·u‖₂ per time
    pub divergence_ratio: Vec<f64>,
    /// max |u_c| over probe points off the annulus R − 1 < |x| < R
    pub uc_outside_max: f64,
    /// total mean carried to the root piece per channel; zero up to quadrature
    pub transfer_totals: Vec<f64>,
    pub f1_l2: Vec<f64>,
    pub f2_l2: Vec<f64>,
}

fn probe_points(r: f64) -> Vec<[f64; 3]> {
    let dirs = fibonacci_sphere(200);
    let mut out = Vec::new();
    for rad in [0.5 * r, r - 1.3, r - 1.02, r + 0.02, r + 0.5] {
        out.extend(dirs.iter().map(|d| [rad * d[0], rad * d[1], rad * d[2]]));
    }
    out
}

pub fn localize(cfg: &ExperimentConfig, r3: &R3, r: f64) -> Result<Ball> {
    let cutoff = Cutoff::new(r, cfg.data.r0)?;
    let partition = Partition::build(cutoff)?;
    let corr = Correction::new(&partition, &r3.flows, BogovskiiQuadrature::correction())?;
    let rule = BallRule::new(r, cutoff.r0, cutoff.r1, &cfg.galerkin.quadrature);
    let start = rule.shell_start;
    let n = rule.len();
    let uc = corr.eval_many(rule.shell());
    let times = r3.times();
    let mut data = BallData::zero(times.clone(), n);
    let nu = cfg.physics.nu;
    let (mut div_ratio, mut f1n, mut f2n) = (Vec::new(), Vec::new(), Vec::new());
    for (ti, flow) in r3.flows.iter().enumerate() {
        let pf = flow.points(&rule.set.points);
        let pr = flow.pressure_at(rule.shell());
        let (mut div2, mut den2, mut f1s, mut f2s) = (0.0, 0.0, 0.0, 0.0);
        for q in 0..n {
            let x = rule.set.points[q];
            let phi = cutoff.jet(x);
            let (c, ct) = if q >= start { (uc[q - start].jets[ti], uc[q - start].dt[ti]) } else { (VJet::default(), [0.0; 3]) };
            let rj = forcing::corrected(&pf[q], &phi, &c);
            data.cut_error[ti][q] = std::array::from_fn(|i| std::array::from_fn(|j| pf[q].du[i][j] - rj.g[i][j]));
            if q >= start {
                let f1 = forcing::f1_point(&pf[q], pr[q - start], &phi, nu);
                let f2 = forcing::f2_point(&pf[q], &phi, &c, ct, nu);
                data.f[ti][q] = std::array::from_fn(|i| f1[i] + f2[i]);
                let w = rule.set.weights[q];
                f1s += w * f1.iter().map(|v| v * v).sum::<f64>();
                f2s += w * f2.iter().map(|v| v * v).sum::<f64>();
                let g: f64 = (0..3).map(|a| phi.g[a] * pf[q].u[a]).sum();
                div2 += w * rj.div().powi(2);
                den2 += w * g * g;
            }
            data.r[ti][q] = rj;
        }
        div_ratio.push(if den2 > 0.0 { (div2 / den2).sqrt() } else { div2.sqrt() });
        f1n.push(f1s.sqrt());
        f2n.push(f2s.sqrt());
    }
    let outside = corr.eval_many(&probe_points(r));
    let uc_outside_max = outside
        .iter()
        .flat_map(|o| o.jets.iter())
        .map(|j| j.v.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let report = BallReport {
        r,
        r0: cutoff.r0,
        r1: cutoff.r1,
        pieces: partition.len(),
        overlap_count: partition.overlap_count,
        max_neighbours: partition.max_neighbours,
        quadrature_nodes: n,
        times,
        divergence_ratio: div_ratio,
        uc_outside_max,
        transfer_totals: corr.transfers.iter().map(|t| t.total).collect(),
        f1_l2: f1n,
        f2_l2: f2n,
    };
    Ok(Ball { r, cutoff, rule, data, report })
}

/// Tail norms of every R at one frame, from a grid refined threefold.
pub fn tail_records(flow: &FlowAt, cfg: &ExperimentConfig) -> Result<Vec<DecayRecord>> {
    let tg = TailGrid::new(flow, 3)?;
    let mut out = Vec::new();
    for &r in &cfg.sweep.r_list {
        let n = tg.norms(&Cutoff::new(r, cfg.data.r0)?);
        for (q, v) in [("grad_u_minus_grad_uphi_L2", n.grad_u_tail), ("pressure_tail_H1", n.pressure_tail), ("u_tail_W14", n.u_tail_w14)] {
            for &a in &cfg.sweep.a_targets {
                out.push(DecayRecord { quantity: q.into(), r, a_target: a, t: flow.t, value: v });
            }
        }
    }
    Ok(out)
}

pub fn forcing_records(ball: &Ball, cfg: &ExperimentConfig) -> Vec<DecayRecord> {
    let mut out = Vec::new();
    for (ti, &t) in ball.report.times.iter().enumerate() {
        for (q, v) in [("F1_L2", ball.report.f1_l2[ti]), ("F2_L2", ball.report.f2_l2[ti])] {
            for &a in &cfg.sweep.a_targets {
                out.push(DecayRecord { quantity: q.into(), r: ball.r, a_target: a, t, value: v });
            }
        }
    }
    out
}

/// Sorted by quantity, then R, then t.
pub fn sort_records(records: &mut [DecayRecord]) {
    let rank = |q: &str| forcing::QUANTITIES.iter().position(|x| *x == q).unwrap_or(usize::MAX);
    records.sort_by(|a, b| {
        rank(&a.quantity)
            .cmp(&rank(&b.quantity))
            .then(a.a_target.total_cmp(&b.a_target))
            .then(a.r.total_cmp(&b.r))
            .then(a.t.total_cmp(&b.t))
    });
}

#[derive(Clone, Debug, Serialize)]
pub struct GalerkinRow {
    #[serde(rename = "R")]
    pub r: f64,
    pub t: f64,
    pub c_norm: f64,
    pub grad_v: f64,
    pub grad_pi: f64,
    pub c_fit: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GalerkinSummary {
    #[serde(rename = "R")]
    pub r: f64,
    pub modes: usize,
    pub lambda_max: f64,
    pub dt: f64,
    pub smallness: Smallness,
    pub envelope: EnvelopeReport,
    pub envelope_half_dt: EnvelopeReport,
    /// fitted C within ±50% under halving dt
    pub c_stable: bool,
    /// outcome with the forcing inflated 10³×: "diverged" or the envelope verdict
    pub stress: String,
    pub stress_pass: bool,
    pub gram_error: f64,
    pub trace_b_max: f64,
    /// max over 100 random c of |Σ c_i c_j c_k B_ij^(k)| / |c|³
    pub energy_defect: f64,
    pub mode_checks_pass: bool,
    pub pressure_projection: f64,
    pub pressure_ratio_p2: f64,
    pub pressure_ratio_p4: f64,
    /// ‖∇(u − w)‖_{L²(B_R)} at 0, T/2, T
    pub transfer_error: Vec<f64>,
}

pub struct GalerkinRun {
    pub summary: GalerkinSummary,
    pub rows: Vec<GalerkinRow>,
    pub modes: Vec<StokesMode>,
    pub checks: Vec<ModeCheck>,
}

pub const STRESS_FACTOR: f64 = 1e3;

pub fn ball_galerkin(cfg: &ExperimentConfig, ball: &Ball) -> Result<GalerkinRun> {
    let gc = &cfg.galerkin;
    let nu = cfg.physics.nu;
    let t_end = cfg.physics.t;
    let basis = StokesBasis::build(ball.r, gc.l_max, gc.n_max)?;
    let tol = cfg.tolerances.mode_tol;
    let mode_checks_pass = basis.checks.iter().all(|c| c.divergence <= 1e-8 && c.trace <= 1e-8 && c.eigen_residual <= tol);
    let mut g = Galerkin::new(&basis, &ball.rule.set, &ball.data, nu)?;
    let n = g.n();
    let gram = g.gram();
    let gram_error = (0..n * n).map(|q| (gram[q] - if q / n == q % n { 1.0 } else { 0.0 }).abs()).fold(0.0, f64::max);
    let trace_b_max = g.trace_b().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.data.seed);
    let mut energy_defect = 0.0f64;
    for _ in 0..100 {
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nl = g.nonlinear(&c);
        let e: f64 = nl.iter().zip(&c).map(|(a, b)| a * b).sum();
        energy_defect = energy_defect.max(e.abs() / c.iter().map(|v| v * v).sum::<f64>().powf(1.5));
    }
    let lambda_max = g.lambda.iter().cloned().fold(0.0, f64::max);
    let dt = gc.dt_ode.min(1.0 / (2.0 * nu * lambda_max));
    let zero = vec![0.0; n];
    let traj = g.integrate(t_end, dt, &zero)?;
    let half = g.integrate(t_end, 0.5 * traj.dt, &zero)?;
    let sm = galerkin::smallness(&ball.data, &ball.rule.set);
    let env = galerkin::check_envelopes(&traj.times, &traj.grad_v, sm.epsilon, sm.n);
    let env_half = galerkin::check_envelopes(&half.times, &half.grad_v, sm.epsilon, sm.n);
    let c_stable = match (env.c_fit, env_half.c_fit) {
        (Some(a), Some(b)) => (b / a - 1.0).abs() <= 0.5,
        _ => false,
    };
    let pressure = g.pressure_series(&traj);
    let c_for_p = env.c_fit.unwrap_or(1.0);
    let p2 = galerkin::pressure_envelope_ratio(&pressure, 2.0, sm.epsilon, sm.n, c_for_p);
    let p4 = galerkin::pressure_envelope_ratio(&pressure, 4.0, sm.epsilon, sm.n, c_for_p);
    let transfer_error = ball.data.times.iter().map(|t| g.transfer_error(&traj, *t)).collect::<Result<Vec<_>>>()?;
    g.scale_forcing(STRESS_FACTOR);
    let (stress, stress_pass) = match g.integrate(t_end, dt, &zero) {
        Err(Error::Divergence(m)) => (format!("diverged: {m}"), false),
        Err(e) => return Err(e),
        Ok(s) => {
            let rep = galerkin::check_envelopes(&s.times, &s.grad_v, STRESS_FACTOR * sm.epsilon, sm.n);
            (if rep.pass { "pass".to_string() } else { "fail".to_string() }, rep.pass)
        }
    };
    let rows = traj
        .times
        .iter()
        .enumerate()
        .map(|(i, t)| GalerkinRow { r: ball.r, t: *t, c_norm: traj.c_norm[i], grad_v: traj.grad_v[i], grad_pi: pressure.norms[i], c_fit: env.c_fit })
        .collect();
    let summary = GalerkinSummary {
        r: ball.r,
        modes: n,
        lambda_max,
        dt: traj.dt,
        smallness: sm,
        envelope: env,
        envelope_half_dt: env_half,
        c_stable,
        stress,
        stress_pass,
        gram_error,
        trace_b_max,
        energy_defect,
        mode_checks_pass,
        pressure_projection: pressure.projection,
        pressure_ratio_p2: p2,
        pressure_ratio_p4: p4,
        transfer_error,
    };
    Ok(GalerkinRun { summary, rows, modes: basis.modes.clone(), checks: basis.checks.clone() })
}

pub fn galerkin_csv(rows: &[GalerkinRow]) -> String {
    let mut s = String::from("R,t,c_norm,grad_v,grad_pi,C_fit\n");
    for r in rows {
        let c = r.c_fit.map(|v| format!("{v:.12e}")).unwrap_or_default();
        let _ = writeln!(s, "{},{},{:.12e},{:.12e},{:.12e},{}", r.r, r.t, r.c_norm, r.grad_v, r.grad_pi, c);
    }
    s
}

#[derive(Serialize)]
struct BasisManifest<'a> {
    #[serde(rename = "R")]
    r: f64,
    l_max: usize,
    n_max: usize,
    modes: &'a [StokesMode],
    checks: &'a [ModeCheck],
}

/// Results of the per-R stages.
#[derive(Default)]
pub struct Sweep {
    pub balls: Vec<BallReport>,
    pub records: Vec<DecayRecord>,
    pub galerkin: Vec<GalerkinSummary>,
    pub rows: Vec<GalerkinRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SweepParts {
    pub localize: bool,
    pub decay: bool,
    pub galerkin: bool,
}

pub fn run_sweep(cfg: &ExperimentConfig, r3: &R3, root: &Path, parts: SweepParts) -> Result<Sweep> {
    let mut sweep = Sweep::default();
    let mut loc = if parts.localize { Some(StageDir::open(root, "localize")?) } else { None };
    let mut gal = if parts.galerkin { Some(StageDir::open(root, "galerkin")?) } else { None };
    if parts.decay {
        for flow in &r3.flows {
            sweep.records.extend(tail_records(flow, cfg)?);
        }
    }
    for &r in &cfg.sweep.r_list {
        let ball = localize(cfg, r3, r)?;
        if let Some(st) = loc.as_mut() {
            st.write_json(&format!("R{r}.json"), &ball.report)?;
        }
        sweep.records.extend(forcing_records(&ball, cfg));
        if let Some(st) = gal.as_mut() {
            let run = ball_galerkin(cfg, &ball)?;
            st.write_json(
                &format!("basis_R{r}.json"),
                &BasisManifest { r, l_max: cfg.galerkin.l_max, n_max: cfg.galerkin.n_max, modes: &run.modes, checks: &run.checks },
            )?;
            sweep.rows.extend(run.rows);
            sweep.galerkin.push(run.summary);
        }
        sweep.balls.push(ball.report);
    }
    if let Some(st) = loc {
        st.finish(cfg)?;
    }
    if let Some(mut st) = gal {
        st.write("galerkin.csv", galerkin_csv(&sweep.rows))?;
        st.write_json("summary.json", &sweep.galerkin)?;
        st.finish(cfg)?;
    }
    if parts.decay {
        let mut st = StageDir::open(root, "decay")?;
        sort_records(&mut sweep.records);
        forcing::write_decay_csv(&st.path("decay.csv"), &sweep.records)?;
        st.written.push("decay.csv".into());
        st.write_json("slopes.json", &forcing::fit_slopes(&sweep.records, cfg.physics.t)?)?;
        st.finish(cfg)?;
    }
    Ok(sweep)
}

pub fn compute_constants(cfg: &ExperimentConfig, r3: &R3, n_measured: Option<f64>) -> Result<ConstantsReport> {
    let m = constants::compute_m(&r3.traj)?;
    let a = cfg.sweep.a_targets.first().copied().unwrap_or(1.0);
    let a_const = constants::compute_a(&r3.traj, a)?;
    let fft = Fft3::<f64>::new(r3.traj.grid);
    let u0 = r3.traj.spectral(&r3.traj.frames[0]);
    let h5 = sobolev_norms(&fft, &u0, 5)?[5].h;
    let inputs = ConstantsInputs {
        a,
        t: cfg.physics.t,
        r0: cfg.data.r0,
        u0_h5: h5,
        c: cfg.constants.c,
        ca: cfg.constants.ca,
        n: n_measured.unwrap_or(1.0).max(1.0),
    };
    ConstantsReport::new(m, a_const, inputs)
}

pub fn run_constants(cfg: &ExperimentConfig, r3: &R3, root: &Path) -> Result<ConstantsReport> {
    let n = std::fs::read_to_string(root.join("galerkin").join("summary.json")).ok().and_then(|s| {
        let v: serde_json::Value = serde_json::from_str(&s).ok()?;
        v.as_array()?.iter().filter_map(|g| g["smallness"]["N"].as_f64()).reduce(f64::max)
    });
    let report = compute_constants(cfg, r3, n)?;
    let mut st = StageDir::open(root, "constants")?;
    st.write_json("constants.json", &report)?;
    st.finish(cfg)?;
    Ok(report)
}

pub const AUDIT_P: [f64; 2] = [2.0, 4.0];

pub fn audit(cfg: &ExperimentConfig, r3: &R3, d_const: f64) -> Result<String> {
    let mut csv = String::new();
    for (i, flow) in r3.flows.iter().enumerate() {
        let frame = r3.traj.frame_at(flow.t)?;
        let u = r3.traj.spectral(frame);
        let mut a_list = vec![0.0];
        a_list.extend(cfg.sweep.a_targets.iter().copied());
        for &a in &a_list {
            for &p in &AUDIT_P {
                let rows = diagnostics::audit_inequalities(&u, cfg.physics.nu, a, p, d_const)?;
                let block = diagnostics::audit_to_csv(flow.t, &rows);
                if i == 0 && csv.is_empty() {
                    csv.push_str(&block);
                } else {
                    csv.push_str(block.split_once('\n').map(|x| x.1).unwrap_or(""));
                }
            }
        }
    }
    Ok(csv)
}

pub fn run_audit(cfg: &ExperimentConfig, r3: &R3, root: &Path) -> Result<()> {
    let path = root.join("constants").join("constants.json");
    let text = std::fs::read_to_string(&path).map_err(|_| Error::MissingArtifact(path.clone()))?;
    let v: serde_json::Value = serde_json::from_str(&text)?;
    let d = v["D"].as_f64().ok_or_else(|| Error::Format { path, message: "no D entry".into() })?;
    let mut st = StageDir::open(root, "audit")?;
    st.write("audit.csv", audit(cfg, r3, d)?)?;
    st.finish(cfg)?;
    Ok(())
}

/// One line of the end-to-end verdict.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub criterion: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct EndToEnd {
    pub verdicts: Vec<Verdict>,
    pub slopes: BTreeMap<String, SlopeFit>,
    /// fitted slope of ‖∇(u − w)(T)‖_{L²(B_R)} against R
    pub transfer_slope: Option<f64>,
    pub transfer_error_t: Vec<(f64, f64)>,
    pub constants: ConstantsReport,
    pub pass: bool,
}

pub const SLOPE_MAX: f64 = -0.75;
pub const DIVERGENCE_R: f64 = 6.0;

pub fn verdicts(cfg: &ExperimentConfig, sweep: &Sweep) -> Result<(Vec<Verdict>, BTreeMap<String, SlopeFit>, Option<f64>, Vec<(f64, f64)>)> {
    let mut out = Vec::new();
    let t_end = cfg.physics.t;
    if let Some(b) = sweep.balls.iter().find(|b| b.r == DIVERGENCE_R) {
        let worst = b.divergence_ratio.iter().cloned().fold(0.0, f64::max);
        out.push(Verdict {
            criterion: "divergence-free correction".into(),
            pass: worst <= cfg.tolerances.div_tol && b.uc_outside_max <= 1e-12,
            detail: format!("ratio {worst:.3e} (tol {:.1e}), |u_c| off annulus {:.1e}", cfg.tolerances.div_tol, b.uc_outside_max),
        });
    }
    let slopes = forcing::fit_slopes(&sweep.records, t_end)?;
    let gate = ["F1_L2", "F2_L2", "grad_u_minus_grad_uphi_L2", "pressure_tail_H1"];
    let mut detail = String::new();
    let mut pass = true;
    for q in gate {
        let s = slopes.get(q).and_then(|f| f.slope_t);
        pass &= s.is_some_and(|v| v <= SLOPE_MAX);
        let _ = write!(detail, "{q} {} ", s.map(|v| format!("{v:.3}")).unwrap_or("undefined".into()));
    }
    out.push(Verdict { criterion: "decay rates".into(), pass, detail: detail.trim_end().into() });
    let mut tr: Vec<(f64, f64)> = sweep.galerkin.iter().map(|g| (g.r, *g.transfer_error.last().unwrap_or(&f64::NAN))).collect();
    tr.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (rs, vs): (Vec<f64>, Vec<f64>) = tr.iter().cloned().unzip();
    let transfer_slope = forcing::fit_slope(&rs, &vs);
    if !sweep.galerkin.is_empty() {
        let monotone = vs.windows(2).all(|w| w[1] <= w[0]);
        out.push(Verdict {
            criterion: "end-to-end transfer".into(),
            pass: monotone && transfer_slope.is_some_and(|s| s <= SLOPE_MAX),
            detail: format!("slope {}, nonincreasing {monotone}", transfer_slope.map(|v| format!("{v:.3}")).unwrap_or("undefined".into())),
        });
        let g = &sweep.galerkin;
        let ok = g.iter().all(|s| s.mode_checks_pass && s.energy_defect <= 1e-8 && s.gram_error <= 1e-8);
        out.push(Verdict {
            criterion: "galerkin integrity".into(),
            pass: ok,
            detail: format!(
                "gram {:.1e}, energy {:.1e}",
                g.iter().map(|s| s.gram_error).fold(0.0, f64::max),
                g.iter().map(|s| s.energy_defect).fold(0.0, f64::max)
            ),
        });
        let ok = g.iter().all(|s| s.envelope.c_fit.is_some() && s.c_stable && !s.stress_pass);
        let fits: Vec<String> = g.iter().map(|s| format!("R={} C={}", s.r, s.envelope.c_fit.map(|c| format!("{c:.3}")).unwrap_or("none".into()))).collect();
        out.push(Verdict { criterion: "small-forcing envelopes".into(), pass: ok, detail: fits.join(", ") });
    }
    Ok((out, slopes, transfer_slope, tr))
}

pub fn run_end_to_end(cfg: &ExperimentConfig, root: &Path) -> Result<EndToEnd> {
    let r3 = run_solve_r3(cfg, root)?;
    let sweep = run_sweep(cfg, &r3, root, SweepParts { localize: true, decay: true, galerkin: true })?;
    let constants = run_constants(cfg, &r3, root)?;
    run_audit(cfg, &r3, root)?;
    let (verdicts, slopes, transfer_slope, transfer_error_t) = verdicts(cfg, &sweep)?;
    let pass = verdicts.iter().all(|v| v.pass);
    let out = EndToEnd { verdicts, slopes, transfer_slope, transfer_error_t, constants, pass };
    let mut st = StageDir::open(root, "end-to-end")?;
    st.write_json("summary.json", &out)?;
    st.finish(cfg)?;
    Ok(out)
}
