use nstruncate::band::BandField;
use nstruncate::constants::*;
use nstruncate::solver::{Frame, Trajectory};
use nstruncate::{Fft3, GridSpec};
use proptest::prelude::*;
use std::f64::consts::PI;

fn steady_sine(frames: usize, amp: f64) -> Trajectory<f64> {
    let grid = GridSpec::new(16, 2.0 * PI).unwrap();
    let fft = Fft3::<f64>::new(grid);
    let u: Vec<f64> = (0..grid.len())
        .map(|q| {
            let (i, _, _) = grid.unravel(q);
            amp * grid.coord(i).sin()
        })
        .collect();
    let zero = vec![0.0; grid.len()];
    let band = |f: &[f64]| BandField::from_spectral(&fft.forward(f), 7);
    let frame = |t: f64| Frame { t, u: [band(&u), band(&zero), band(&zero)] };
    Trajectory { grid, nu: 1.0, dt: 0.1, steps: frames, frames: (0..frames).map(|i| frame(0.1 * i as f64)).collect(), max_divergence: 0.0 }
}

#[test]
fn m_of_single_mode_is_parseval() {
    // ‖∂₁^m u‖² = L³/2 for m = 0..5 and every sup is 1
    let l3 = (2.0 * PI).powi(3);
    let want = (6.0 * l3 / 2.0).sqrt() + 1.0;
    let m = compute_m(&steady_sine(2, 1.0)).unwrap();
    assert!((m - want).abs() < 1e-9 * want, "{m} vs {want}");
}

#[test]
fn m_floor_and_monotone() {
    assert_eq!(compute_m(&steady_sine(1, 0.0)).unwrap(), 1.0);
    let empty = Trajectory::<f64> { frames: vec![], ..steady_sine(1, 0.0) };
    assert!(compute_m(&empty).is_err());
    let short = m_from_norms(&[(2.0, 1.0), (1.0, 0.5)]).unwrap();
    let long = m_from_norms(&[(2.0, 1.0), (1.0, 0.5), (4.0, 0.1)]).unwrap();
    assert!(long >= short);
}

#[test]
fn r_min_on_a_grid() {
    let (m, t, c, ca, r0) = (1.5, 0.5, 1.0, 1.0, 2.0);
    let a_list = [0.1, 0.4, 0.7, 1.0, 1.4];
    let d_list = [3.0, 5.0, 10.0, 20.0, 50.0];
    for &a in &a_list {
        let row: Vec<f64> = d_list.iter().map(|&d| compute_r_min(a, m, t, d, c, ca, r0).unwrap()).collect();
        assert!(row.windows(2).all(|w| w[1] > w[0]), "a={a}");
    }
    for &d in &d_list {
        let col: Vec<f64> = a_list.iter().map(|&a| compute_r_min(a, m, t, d, c, ca, r0).unwrap()).collect();
        assert!(col.windows(2).all(|w| w[1] <= w[0]), "D={d}");
    }
    // a = 1/2 squares the power term
    let base = 10.0f64 * 10.0 * (c * m.powi(4) * t).exp() / m.powi(3);
    assert!((compute_r_min(0.5, m, t, 10.0, c, ca, r0).unwrap() - base * base).abs() < 1e-9 * base * base);
    assert!(compute_r_min(1.5, m, t, 3.0, c, ca, r0).is_err());
}

#[test]
fn r_min_strictly_decreasing_in_a() {
    let (m, t, d) = (1.2, 0.5, 8.0);
    let mut prev = f64::INFINITY;
    for i in 0..=130 {
        let a = 0.1 + 0.01 * i as f64;
        let r = compute_r_min(a, m, t, d, 1.0, 1.0, 2.0).unwrap();
        assert!(r < prev, "a={a}");
        prev = r;
    }
}

#[test]
fn g_meets_its_differential_inequality() {
    for &(eps, n, c) in &[(0.1, 1.0, 1.0), (0.5, 2.0, 1.0), (1e-3, 3.0, 2.0), (1.0, 1.0, 1.0)] {
        assert_eq!(g_inequality_defect(2.0, eps, n, c, 1000), 0.0, "eps={eps} N={n} C={c}");
    }
}

#[test]
fn d_dominates_m() {
    assert!(compute_d_general(3.0, 0.0, 0.0, 1.0) >= 3.0);
    assert!(compute_d(3.0, 0.2, 1.0, 0.0, 1.0, 1.0) >= 3.0);
}

proptest! {
    #[test]
    fn report_entries_positive(m in 1.0f64..2.0, t in 0.0f64..0.5, a in 0.3f64..1.45, h5 in 0.0f64..10.0, n in 1.0f64..4.0) {
        let inputs = ConstantsInputs { a, t, r0: 2.0, u0_h5: h5, c: 1.0, ca: 1.0, n };
        let r = ConstantsReport::new(m, 0.0, inputs).unwrap();
        prop_assert!(r.d >= m && r.d_general >= m);
        prop_assert!(r.r_min >= 3.0);
        prop_assert!(g_envelope(0.0, 0.3, n, 1.0) == 0.0);
    }
}
