use nstruncate::diagnostics::{audit_inequalities, check_gronwall, grujic_kukavica, gronwall_table, weighted_vorticity, weighted_vorticity_series};
use nstruncate::initial::band_limited_initial_data;
use nstruncate::solver::{exact_terms, pressure, NseSolver, SolverState};
use nstruncate::spectral::vector;
use nstruncate::{Error, Fft3, GridSpec, ScalarField, SpectralField, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn shear(g: GridSpec, amp: f64) -> VectorField<f64> {
    VectorField::from_fn(g, |x| [amp * (2.0 * PI * x[1] / g.l).sin(), 0.0, 0.0])
}

/// Random low-mode velocity, projected onto divergence-free fields.
fn random_state(solver: &NseSolver<f64>, seed: u64, kmax: i32, amp: f64) -> SolverState<f64> {
    let g = solver.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let waves: Vec<([f64; 3], [f64; 3], f64)> = (0..10)
        .map(|_| {
            let k = [0; 3].map(|_: i32| rng.gen_range(-kmax..=kmax) as f64);
            let a = [0; 3].map(|_: i32| rng.gen_range(-amp..amp));
            (k, a, rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    let u = VectorField::from_fn(g, |x| {
        let mut v = [0.0; 3];
        for (k, a, s) in &waves {
            let ph = (2.0 * PI / g.l * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2]) + s).cos();
            for c in 0..3 {
                v[c] += a[c] * ph;
            }
        }
        v
    });
    solver.project_initial(&u).unwrap().0
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let n: f64 = b.iter().map(|y| y * y).sum();
    (d / n).sqrt()
}

#[test]
fn shear_flow_decays_exactly() {
    let g = GridSpec::new(16, 2.0 * PI).unwrap();
    for nu in [0.1, 1.0] {
        let solver = NseSolver::<f64>::new(g, nu).unwrap();
        let (mut s, dep) = solver.project_initial(&shear(g, 1.0)).unwrap();
        assert!(dep < 1e-14);
        let dt = 0.01;
        for _ in 0..100 {
            s = solver.step(&s, dt).unwrap();
        }
        let decay = (-nu * (2.0 * PI / g.l).powi(2) * s.t).exp();
        let u = solver.velocity(&s.u_hat, s.t);
        let want = shear(g, decay);
        for c in 0..3 {
            let e = u.comps[c].iter().zip(&want.comps[c]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(e <= 1e-6 * decay, "nu={nu} comp {c}: {e}");
        }
        assert!(rel_l2(&u.comps[0], &want.comps[0]) <= 1e-6);
    }
}

#[test]
fn zero_field_stays_zero() {
    let g = GridSpec::new(8, 3.0).unwrap();
    let solver = NseSolver::<f64>::new(g, 1.0).unwrap();
    let (s, _) = solver.project_initial(&VectorField::zeros(g)).unwrap();
    let traj = solver.run(s, 0.1, 0.02).unwrap();
    for f in &traj.frames {
        assert!(f.u.iter().all(|b| b.coeffs.iter().all(|c| c.norm() == 0.0)));
    }
    assert!(solver.admissible_dt(&solver.project_initial(&VectorField::zeros(g)).unwrap().0).is_infinite());
}

#[test]
fn energy_identity_per_step_pair() {
    let g = GridSpec::new(16, 2.0 * PI).unwrap();
    let nu = 1.0;
    let solver = NseSolver::<f64>::new(g, nu).unwrap();
    let mut s = random_state(&solver, 3, 2, 0.5);
    let dt = 1e-3;
    let energy = |s: &SolverState<f64>| vector::energy(&s.u_hat);
    let dissipation = |s: &SolverState<f64>| vector::grad_energy(&s.u_hat);
    for _ in 0..20 {
        let s1 = solver.step(&s, dt).unwrap();
        let s2 = solver.step(&s1, dt).unwrap();
        // Simpson over [t, t + 2dt]
        let integral = dt / 3.0 * (dissipation(&s) + 4.0 * dissipation(&s1) + dissipation(&s2));
        let defect = energy(&s2) - energy(&s) + 2.0 * nu * integral;
        assert!(defect.abs() <= 1e-8 * energy(&s), "{defect}");
        s = s2;
    }
}

#[test]
fn steps_keep_the_field_solenoidal() {
    let g = GridSpec::new(16, 2.0 * PI).unwrap();
    let solver = NseSolver::<f64>::new(g, 0.1).unwrap();
    let s = random_state(&solver, 8, 4, 1.0);
    let traj = solver.run(s, 0.2, 0.01).unwrap();
    assert!(traj.max_divergence <= 1e-10);
    assert!((traj.final_time() - 0.2).abs() < 1e-12);
    assert!(traj.frame_at(0.1).is_ok());
}

#[test]
fn cfl_violation_and_bad_steps_are_rejected() {
    let g = GridSpec::new(16, 2.0 * PI).unwrap();
    let solver = NseSolver::<f64>::new(g, 1.0).unwrap();
    let (s, _) = solver.project_initial(&shear(g, 10.0)).unwrap();
    let limit = solver.admissible_dt(&s);
    assert!((limit - g.h() / 40.0).abs() < 1e-12);
    match solver.step(&s, 2.0 * limit) {
        Err(Error::InvalidInput(m)) => assert!(m.contains("admissible")),
        other => panic!("{:?}", other.map(|_| ())),
    }
    assert!(solver.step(&s, 0.0).is_err());
    assert!(NseSolver::<f64>::new(g, 0.0).is_err());
    let mut bad = s.clone();
    bad.u_hat[0].data[1].re = f64::NAN;
    assert!(matches!(solver.step(&bad, 1e-6), Err(Error::Numerical(_))));
}

#[test]
fn pressure_of_shear_and_zero_vanish() {
    let g = GridSpec::new(16, 4.0).unwrap();
    let fft = Fft3::<f64>::new(g);
    let u = VectorField::<f64>::from_fn(g, |x| [(PI * x[1] / 2.0).sin() + 0.5 * (PI * x[1]).cos(), 0.0, 0.0]);
    let p = pressure(&fft.forward_vector(&u)).unwrap();
    assert!(p.max_abs() < 1e-13);
    let z = pressure(&fft.forward_vector(&VectorField::zeros(g))).unwrap();
    assert!(z.max_abs() == 0.0);
}

#[test]
fn pressure_gradient_is_annihilated_by_leray() {
    let g = GridSpec::new(16, 2.0 * PI).unwrap();
    let solver = NseSolver::<f64>::new(g, 1.0).unwrap();
    let s = random_state(&solver, 21, 3, 1.0);
    let terms = exact_terms(&s.u_hat, 1.0).unwrap();
    let grad = vector::gradient(&terms.pressure);
    let proj = vector::leray(&grad);
    let g2 = vector::energy(&grad);
    assert!(g2 > 0.0);
    assert!((vector::energy(&proj) / g2).sqrt() <= 1e-10);
    assert!(terms.pressure.mean().abs() < 1e-14);
    // π solves −Δπ = ∂_i∂_j(u_i u_j)
    let fine = terms.fine;
    let fft = Fft3::<f64>::new(fine);
    let uf: Vec<Vec<f64>> = s.u_hat.iter().map(|c| fft.inverse(&c.resample(fine.n).unwrap())).collect();
    let mut rhs = SpectralField::zeros(fine);
    for i in 0..3 {
        for j in 0..3 {
            let prod: Vec<f64> = uf[i].iter().zip(&uf[j]).map(|(a, b)| a * b).collect();
            rhs = rhs.add(&fft.forward(&prod).d(i).d(j));
        }
    }
    let lap = terms.pressure.laplacian().scaled(-1.0);
    let diff = lap.add(&rhs.scaled(-1.0));
    assert!((diff.energy() / rhs.energy()).sqrt() < 1e-12);
}

#[test]
fn vorticity_and_curl_curl() {
    let g = GridSpec::new(16, 3.0).unwrap();
    let solver = NseSolver::<f64>::new(g, 1.0).unwrap();
    let fft = solver.fft();
    let k = 2.0 * PI / g.l;
    let w = solver.vorticity(&fft.forward_vector(&shear(g, 1.0)));
    let wz = fft.inverse(&w[2]);
    let want = ScalarField::<f64>::from_fn(g, |x| -k * (k * x[1]).cos());
    assert!(wz.iter().zip(&want.data).all(|(a, b)| (a - b).abs() < 1e-12));
    assert!(fft.inverse(&w[0]).iter().chain(&fft.inverse(&w[1])).all(|v| v.abs() < 1e-12));
    let zero = solver.vorticity(&fft.forward_vector(&VectorField::zeros(g)));
    assert!(zero.iter().all(|s| s.energy() == 0.0));
    let s = random_state(&solver, 4, 3, 1.0);
    assert!(solver.curl_curl_residual(&s.u_hat) <= 1e-10);
}

#[test]
fn enstrophy_and_refined_quadrature() {
    let g = GridSpec::new(16, 8.0).unwrap();
    let fft = Fft3::<f64>::new(g);
    let (u, _) = band_limited_initial_data::<f64>(g, 2.0, 3, 5.0, 2, 0.05).unwrap();
    let rows = weighted_vorticity(&fft, &u, &[0.0, 1.0], 2).unwrap();
    let enstrophy = vector::energy(&vector::curl(&u));
    let g00 = rows.iter().find(|r| r.0 == 0 && r.1 == 0.0).unwrap().2;
    assert!((g00 - enstrophy).abs() <= 1e-10 * enstrophy);
    let fine = g.refined(2);
    let uf: [SpectralField<f64>; 3] = std::array::from_fn(|c| u[c].resample(fine.n).unwrap());
    let rows_f = weighted_vorticity(&Fft3::new(fine), &uf, &[0.0, 1.0], 2).unwrap();
    for (a, b) in rows.iter().zip(&rows_f) {
        assert_eq!((a.0, a.1), (b.0, b.1));
        // the |x| weight has kinks at the origin and the box faces
        let tol = if a.1 == 0.0 { 1e-6 } else { 1e-2 };
        assert!((a.2 - b.2).abs() <= tol * b.2, "l={} a={}: {} vs {}", a.0, a.1, a.2, b.2);
    }
    assert!(weighted_vorticity(&fft, &u, &[11.0], 0).is_err());
}

#[test]
fn gronwall_fits() {
    let decaying: Vec<(f64, f64)> = (0..10).map(|i| (0.1 * i as f64, (-(i as f64)).exp())).collect();
    assert_eq!(check_gronwall(&decaying, 1.0).unwrap(), 0.0);
    let m = 3.0;
    let g0 = 2.0;
    let synth: Vec<(f64, f64)> = (0..20).map(|i| {
        let t = 0.05 * i as f64;
        (t, (2.0 * m * t).exp() * (g0 + m) - m)
    }).collect();
    let c = check_gronwall(&synth, m).unwrap();
    assert!(c <= 2.0 && c > 1.5, "{c}");
    assert!(check_gronwall(&[], 1.0).is_err());
    assert!(check_gronwall(&synth, 0.5).is_err());
}

#[test]
fn gronwall_on_a_solver_run_is_finite() {
    let g = GridSpec::new(16, 8.0).unwrap();
    let solver = NseSolver::<f64>::new(g, 1.0).unwrap();
    let (u, _) = band_limited_initial_data::<f64>(g, 2.0, 7, 20.0, 2, 0.05).unwrap();
    let s = solver.state_from_spectral(u, 0.0);
    let traj = solver.run(s, 0.1, 0.01).unwrap();
    let rows = weighted_vorticity_series(&traj, &[0.0, 1.0, 2.0], 4).unwrap();
    assert!(rows.iter().all(|r| r.value.is_finite() && r.value >= 0.0));
    let table = gronwall_table(&rows, 1.0).unwrap();
    assert_eq!(table.len(), 15);
    assert!(table.iter().all(|r| r.2.is_finite() && r.2 >= 0.0));
}

#[test]
fn grujic_kukavica_on_a_gaussian() {
    let g = GridSpec::new(48, 12.0).unwrap();
    let f = ScalarField::<f64>::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp());
    let (l1, rhs) = grujic_kukavica(&f).unwrap();
    assert!((l1 - PI.powf(1.5)).abs() < 1e-8 * l1);
    // ‖|x|³f‖₂ from a fine radial midpoint sum
    let l2 = (PI / 2.0).powf(0.75);
    let radial = {
        let n = 20000;
        let h = 10.0 / n as f64;
        (0..n).map(|i| {
            let r = (i as f64 + 0.5) * h;
            4.0 * PI * r.powi(8) * (-2.0 * r * r).exp() * h
        }).sum::<f64>().sqrt()
    };
    assert!((rhs - (l2 * radial).sqrt()).abs() < 1e-6 * rhs);
    assert!((l1 / rhs).is_finite());
}

#[test]
fn audit_of_zero_field_is_zero() {
    let g = GridSpec::new(8, 4.0).unwrap();
    let zero: [SpectralField<f64>; 3] = std::array::from_fn(|_| SpectralField::zeros(g));
    let rows = audit_inequalities(&zero, 1.0, 1.0, 2.0, 1.0).unwrap();
    assert!(rows.len() >= 7);
    for r in &rows {
        assert_eq!(r.lhs, 0.0, "{}", r.id);
        assert_eq!(r.ratio, 0.0, "{}", r.id);
    }
}

#[test]
fn audit_flags_out_of_range_weights() {
    let g = GridSpec::new(16, 8.0).unwrap();
    let (u, _) = band_limited_initial_data::<f64>(g, 2.0, 7, 5.0, 2, 0.05).unwrap();
    let rows = audit_inequalities(&u, 1.0, 1.6, 2.0, 1.0).unwrap();
    let sing = rows.iter().find(|r| r.id == "weighted_singular_integral").unwrap();
    assert!(!sing.in_range);
    let rows = audit_inequalities(&u, 1.0, 1.0, 2.0, 1.0).unwrap();
    assert!(rows.iter().all(|r| r.ratio.is_finite() && r.in_range), "{rows:?}");
}

#[test]
fn single_precision_solver_tracks_double() {
    let g = GridSpec::new(16, 2.0 * PI).unwrap();
    let s64 = nstruncate::Solver64::new(g, 0.5).unwrap();
    let s32 = nstruncate::Solver32::new(g, 0.5).unwrap();
    let u = shear(g, 1.0);
    let u32 = VectorField::<f32> { grid: g, comps: std::array::from_fn(|c| u.comps[c].iter().map(|v| *v as f32).collect()), time: 0.0 };
    let a = s64.run(s64.project_initial(&u).unwrap().0, 0.1, 0.01).unwrap();
    let b = s32.run(s32.project_initial(&u32).unwrap().0, 0.1, 0.01).unwrap();
    let fa = a.spectral(a.frames.last().unwrap());
    let fb = b.spectral(b.frames.last().unwrap());
    let va = s64.fft().inverse(&fa[0]);
    let vb = s32.fft().inverse(&fb[0]);
    let e = va.iter().zip(&vb).map(|(x, y)| (x - *y as f64).abs()).fold(0.0, f64::max);
    assert!(e < 1e-5, "{e}");
}
