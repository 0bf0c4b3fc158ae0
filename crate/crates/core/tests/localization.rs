mod common;

use common::*;
use nstruncate::bogovskii::BogovskiiQuadrature;
use nstruncate::correction::{Correction, PER_TIME};
use nstruncate::localization::{fibonacci_sphere, norm, sub, Cutoff, Partition};
use nstruncate::GridSpec;
use proptest::prelude::*;

#[test]
fn cutoff_profile() {
    let c = Cutoff::new(6.0, 2.0).unwrap();
    assert_eq!((c.r0, c.r1), (5.25, 5.75));
    assert_eq!(c.value([0.0; 3]), 1.0);
    assert_eq!(c.value([6.0, 0.0, 0.0]), 0.0);
    assert_eq!(c.value([0.0, 5.25, 0.0]), 1.0);
    assert_eq!(c.value([0.0, 0.0, 5.75]), 0.0);
    let mut slope: f64 = 0.0;
    for i in 0..=200_000 {
        let r = c.r0 + c.width() * i as f64 / 200_000.0;
        let d = c.radial(r);
        assert!((0.0..=1.0).contains(&d[0]));
        slope = slope.max(d[1].abs());
    }
    assert!((slope - c.sup_slope()).abs() < 1e-9 * slope);
    // 630 t⁴(1−t)⁴ peaks at t = 1/2
    assert!((c.sup_slope() * c.width() - 2.4609375).abs() < 1e-12);
    assert!(Cutoff::new(2.9, 2.0).is_err());
    assert!(Cutoff::new(3.0, 2.0).is_ok());
}

#[test]
fn cutoff_jet_matches_differences() {
    let c = Cutoff::new(5.0, 2.0).unwrap();
    let h = 1e-4;
    for x in shell_points(c.r0 - 0.1, c.r1 + 0.1, 50, 1) {
        let j = c.jet(x);
        let mut lap = 0.0;
        for a in 0..3 {
            let mut p = x;
            let mut m = x;
            p[a] += h;
            m[a] -= h;
            let (fp, fm) = (c.value(p), c.value(m));
            assert!((j.g[a] - (fp - fm) / (2.0 * h)).abs() < 1e-6, "{x:?}");
            lap += (fp - 2.0 * j.v + fm) / (h * h);
        }
        assert!((j.l - lap).abs() < 1e-3 * (1.0 + lap.abs()), "{} {lap}", j.l);
    }
}

#[test]
fn partition_sums_to_one_on_the_shell() {
    let c = Cutoff::new(6.0, 2.0).unwrap();
    let p = Partition::build(c).unwrap();
    let mut psi = Vec::new();
    for x in shell_points(c.r0, c.r1, 10_000, 2) {
        p.psi_values(x, &mut psi);
        let s: f64 = psi.iter().map(|e| e.1).sum();
        assert!((s - 1.0).abs() <= 1e-12, "{x:?} {s}");
        for &(l, v) in &psi {
            assert!((0.0..=1.0).contains(&v));
            assert!(norm(sub(x, p.centers[l])) < p.rho);
        }
    }
}

#[test]
fn balls_lie_in_the_annulus_and_overlap_boundedly() {
    for r in [4.0, 6.0, 8.0, 10.0] {
        let p = Partition::build(Cutoff::new(r, 2.0).unwrap()).unwrap();
        assert!(p.overlap_count <= 12, "R={r}: {}", p.overlap_count);
        assert!(p.max_nn_angle <= Partition::SPACING / (r - 0.5));
        for c in &p.centers {
            let d = norm(*c);
            assert!((d - (r - 0.5)).abs() < 1e-12);
            assert!(d - p.rho > r - 1.0 && d + p.rho < r);
        }
        let g = GridSpec::new(64, 4.0 * r).unwrap();
        p.verify_grid(g).unwrap();
    }
}

#[test]
fn partition_is_deterministic_and_pinned() {
    let c = Cutoff::new(6.0, 2.0).unwrap();
    let a = Partition::build(c).unwrap();
    let b = Partition::build(c).unwrap();
    assert_eq!(a.centers, b.centers);
    assert_eq!(a.len(), 3104);
    let m = serde_json::to_value(a.manifest()).unwrap();
    for key in ["R", "r0", "r1", "rho", "centers", "overlap_count"] {
        assert!(m.get(key).is_some(), "{key}");
    }
    assert_eq!(m["centers"].as_array().unwrap().len(), a.len());
}

#[test]
fn psi_jets_match_differences() {
    let c = Cutoff::new(4.0, 2.0).unwrap();
    let p = Partition::build(c).unwrap();
    let (mut jets, mut vals) = (Vec::new(), Vec::new());
    let h = 1e-4;
    let value = |x: [f64; 3], l: usize, buf: &mut Vec<(usize, f64)>| {
        p.psi_values(x, buf);
        buf.iter().find(|e| e.0 == l).map(|e| e.1).unwrap_or(0.0)
    };
    for x in shell_points(c.r0, c.r1, 40, 3) {
        p.psi_jets(x, &mut jets);
        for &(l, j) in &jets {
            let mut lap = 0.0;
            for a in 0..3 {
                let (mut xp, mut xm) = (x, x);
                xp[a] += h;
                xm[a] -= h;
                let (fp, fm) = (value(xp, l, &mut vals), value(xm, l, &mut vals));
                assert!((j.g[a] - (fp - fm) / (2.0 * h)).abs() < 1e-5 * (1.0 + j.g[a].abs()));
                lap += (fp - 2.0 * j.v + fm) / (h * h);
            }
            assert!((j.l - lap).abs() < 1e-2 * (1.0 + j.l.abs()), "{} {lap}", j.l);
        }
    }
}

#[test]
fn tree_transfer_accumulates_subtrees() {
    let p = Partition::build(Cutoff::new(4.0, 2.0).unwrap()).unwrap();
    let t = &p.tree;
    let means: Vec<f64> = (0..p.len()).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
    let tr = t.transfer(&means);
    assert!((tr.total - means.iter().sum::<f64>()).abs() < 1e-9);
    for b in 0..p.len() {
        let own: f64 = means[b] + t.children[b].iter().map(|&k| tr.subtree[k]).sum::<f64>();
        assert!((tr.subtree[b] - own).abs() < 1e-9);
        if let Some(par) = t.parent[b] {
            assert!(norm(sub(p.centers[par], p.centers[b])) < p.rho);
            let bump = t.edge_bump[b].unwrap();
            assert!(norm(sub(bump.center, p.centers[b])) + bump.radius <= p.rho + 1e-12);
            assert!(norm(sub(bump.center, p.centers[par])) + bump.radius <= p.rho + 1e-12);
        }
    }
    assert_eq!(t.order.len(), p.len());
    assert!(t.parent[t.root].is_none());
}

#[test]
fn pieces_sum_to_the_cutoff_divergence() {
    let c = Cutoff::new(4.0, 2.0).unwrap();
    let p = Partition::build(c).unwrap();
    let corr = Correction::new(&p, &small_flows()[..1], BogovskiiQuadrature::default()).unwrap();
    let root = p.tree.root;
    let mut vals = vec![0.0; corr.table.nf];
    let mut psi = Vec::new();
    for y in shell_points(c.r0, c.r1, 300, 4) {
        p.psi_values(y, &mut psi);
        let sum: f64 = (0..p.len()).filter(|l| psi.iter().any(|e| e.0 == *l) || *l == root).map(|l| corr.piece(l, 0, y)).sum();
        assert!(corr.table.interp(y, &mut vals));
        let grad_phi_u = c.radial(norm(y))[1] * vals[0];
        let kernel = p.kernels[root].value(y);
        let want = grad_phi_u - corr.transfers[0].total * kernel;
        assert!((sum - want).abs() <= 1e-10 * (1.0 + grad_phi_u.abs()), "{sum} {want}");
    }
    assert_eq!(PER_TIME, 6);
}

#[test]
fn pieces_have_zero_mean() {
    use nstruncate::correction::cap_rule;
    let c = Cutoff::new(4.0, 2.0).unwrap();
    let p = Partition::build(c).unwrap();
    let corr = Correction::new(&p, &small_flows()[..1], BogovskiiQuadrature::default()).unwrap();
    // ball-filling rule: shell part by the cap rule, bumps are unit mass
    let fine = cap_rule(&c, c.r - 0.5, p.rho, 48, 40, 96);
    let mut worst: f64 = 0.0;
    for l in (0..p.len()).step_by(97) {
        let cl = p.centers[l];
        let e3 = [cl[0] / norm(cl), cl[1] / norm(cl), cl[2] / norm(cl)];
        let t = if e3[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
        let d = t[0] * e3[0] + t[1] * e3[1] + t[2] * e3[2];
        let e1 = {
            let v = [t[0] - d * e3[0], t[1] - d * e3[1], t[2] - d * e3[2]];
            let n = norm(v);
            [v[0] / n, v[1] / n, v[2] / n]
        };
        let e2 = [e3[1] * e1[2] - e3[2] * e1[1], e3[2] * e1[0] - e3[0] * e1[2], e3[0] * e1[1] - e3[1] * e1[0]];
        let (mut mean, mut l1) = (0.0, 0.0);
        for (o, w) in &fine {
            let x: [f64; 3] = std::array::from_fn(|i| o[0] * e1[i] + o[1] * e2[i] + o[2] * e3[i]);
            let mut psi = Vec::new();
            p.psi_values(x, &mut psi);
            let Some(&(_, ps)) = psi.iter().find(|e| e.0 == l) else { continue };
            let mut vals = vec![0.0; corr.table.nf];
            if !corr.table.interp(x, &mut vals) {
                continue;
            }
            let f = ps * c.radial(norm(x))[1] * vals[0];
            mean += w * f;
            l1 += w * f.abs();
        }
        // bump coefficients; each bump has unit mass
        let t = &p.tree;
        let tr = &corr.transfers[0];
        let mut coeffs = t.children[l].iter().map(|&k| tr.subtree[k]).sum::<f64>();
        if t.parent[l].is_some() {
            coeffs -= tr.subtree[l];
        }
        if l == t.root {
            coeffs -= tr.total;
        }
        assert!((corr.means[l][0] + coeffs).abs() <= 1e-12 * l1, "ball {l}");
        worst = worst.max((mean + coeffs).abs() / l1);
    }
    // mean of each piece under a refined rule
    assert!(worst < 2e-6, "{worst}");
}

#[test]
fn zero_flow_gives_zero_pieces() {
    let c = Cutoff::new(4.0, 2.0).unwrap();
    let p = Partition::build(c).unwrap();
    let flows = zero_flows();
    let corr = Correction::new(&p, &flows[..1], BogovskiiQuadrature::default()).unwrap();
    for y in shell_points(c.r - 1.0, c.r, 50, 5) {
        for l in [0, p.len() / 2, p.len() - 1] {
            assert_eq!(corr.piece(l, 0, y), 0.0);
        }
    }
    assert!(corr.means.iter().flatten().all(|m| *m == 0.0));
}

#[test]
fn fibonacci_points_are_unit() {
    for p in fibonacci_sphere(257) {
        assert!((norm(p) - 1.0).abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cutoff_is_radial_and_bounded(r in 3.0f64..12.0, x in prop::array::uniform3(-12.0f64..12.0)) {
        let c = Cutoff::new(r, 2.0).unwrap();
        let v = c.value(x);
        prop_assert!((0.0..=1.0).contains(&v));
        let d = norm(x);
        if d <= c.r0 { prop_assert_eq!(v, 1.0); }
        if d >= c.r1 { prop_assert_eq!(v, 0.0); }
        let rot = [x[1], x[2], x[0]];
        prop_assert_eq!(c.value(rot).to_bits(), c.radial(norm(rot))[0].to_bits());
    }
}
