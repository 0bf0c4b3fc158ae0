mod common;

use common::*;
use nstruncate::ballquad::{BallRule, BallRuleSpec};
use nstruncate::bogovskii::*;
use nstruncate::correction::Correction;
use nstruncate::forcing::{corrected, cut_velocity};
use nstruncate::localization::{norm, Bump, Cutoff, Jet, Partition};

fn geometry() -> BallGeometry {
    BallGeometry::new([0.3, -0.2, 0.1], 0.49, [0.3, -0.2, 0.1], 0.245).unwrap()
}

/// +1 on an inner shell, −1 on an outer one, mollified and balanced.
fn shell_pair(g: &BallGeometry) -> impl Fn([f64; 3]) -> Jet + Sync + Clone {
    let inner = Bump::new(g.center, 0.5 * g.rho);
    let outer = Bump::new(g.center, g.rho);
    move |x| outer.jet(x).scale(-1.0).add(inner.jet(x))
}

#[test]
fn zero_source_gives_zero_field() {
    let g = geometry();
    let p = BallProblem::new(g, |_| Jet::default()).unwrap();
    let q = BogovskiiQuadrature::default();
    let ang = AngularRule::new(q.n_theta);
    for (x, _) in g.volume_rule(3, 3) {
        assert_eq!(p.solve_at(x, &q, &ang), VJet::default());
    }
}

#[test]
fn radial_pair_is_inverted_and_converges() {
    let g = geometry();
    let p = BallProblem::new(g, shell_pair(&g)).unwrap();
    let q = BogovskiiQuadrature::default();
    let e0 = divergence_residual(&p, &q, 6, 6);
    let e1 = divergence_residual(&p, &q.refined(), 6, 6);
    assert!(e0 <= 1e-3, "{e0}");
    assert!(e1 <= e0 / 4.0, "{e0} {e1}");
}

#[test]
fn translation_equivariance() {
    let g = geometry();
    let shift = [16.0, -16.0, 32.0];
    let moved = |c: [f64; 3]| [c[0] + shift[0], c[1] + shift[1], c[2] + shift[2]];
    let h = BallGeometry::new(moved(g.center), g.rho, moved(g.kernel.center), g.kernel.radius).unwrap();
    let src = random_zero_mean_source(&g, 3);
    let src_h = random_zero_mean_source(&h, 3);
    let p = BallProblem::new(g, src).unwrap();
    let ph = BallProblem::new(h, src_h).unwrap();
    let q = BogovskiiQuadrature::default();
    let ang = AngularRule::new(q.n_theta);
    for (x, _) in g.volume_rule(3, 3) {
        let a = p.solve_at(x, &q, &ang);
        let b = ph.solve_at(moved(x), &q, &ang);
        let scale = a.v.iter().chain(a.g.iter().flatten()).fold(1.0f64, |m, v| m.max(v.abs()));
        for i in 0..3 {
            assert!((a.v[i] - b.v[i]).abs() <= 1e-12 * scale);
            for j in 0..3 {
                assert!((a.g[i][j] - b.g[i][j]).abs() <= 1e-12 * scale);
            }
        }
    }
}

#[test]
fn linear_in_the_source() {
    let g = geometry();
    let f = random_zero_mean_source(&g, 9);
    let f2 = {
        let f = f.clone();
        move |x: [f64; 3]| f(x).scale(2.0)
    };
    let p = BallProblem::new(g, f).unwrap();
    let p2 = BallProblem::new(g, f2).unwrap();
    let q = BogovskiiQuadrature::default();
    let ang = AngularRule::new(q.n_theta);
    for (x, _) in g.volume_rule(2, 3) {
        let (a, b) = (p.solve_at(x, &q, &ang), p2.solve_at(x, &q, &ang));
        for i in 0..3 {
            assert!((2.0 * a.v[i] - b.v[i]).abs() <= 1e-12 * (1.0 + b.v[i].abs()));
            assert!((2.0 * a.l[i] - b.l[i]).abs() <= 1e-12 * (1.0 + b.l[i].abs()));
        }
    }
}

#[test]
fn jets_match_differences() {
    let g = geometry();
    let p = BallProblem::new(g, random_zero_mean_source(&g, 4)).unwrap();
    let q = BogovskiiQuadrature::default().refined();
    let ang = AngularRule::new(q.n_theta);
    let h = 1e-4;
    for (x, _) in g.volume_rule(2, 2).into_iter().take(12) {
        let j = p.solve_at(x, &q, &ang);
        let mut lap = [0.0; 3];
        for a in 0..3 {
            let (mut xp, mut xm) = (x, x);
            xp[a] += h;
            xm[a] -= h;
            let (vp, vm) = (p.solve_at(xp, &q, &ang).v, p.solve_at(xm, &q, &ang).v);
            for i in 0..3 {
                let d = (vp[i] - vm[i]) / (2.0 * h);
                assert!((j.g[i][a] - d).abs() < 1e-4 * (1.0 + d.abs()), "{} {d}", j.g[i][a]);
                lap[i] += (vp[i] - 2.0 * j.v[i] + vm[i]) / (h * h);
            }
        }
        for i in 0..3 {
            assert!((j.l[i] - lap[i]).abs() < 1e-2 * (1.0 + lap[i].abs()), "{} {}", j.l[i], lap[i]);
        }
    }
}

#[test]
fn kernel_must_sit_inside_the_ball() {
    assert!(BallGeometry::new([0.0; 3], 1.0, [0.6, 0.0, 0.0], 0.5).is_err());
    let g = BallGeometry::new([0.0; 3], 1.0, [0.2, 0.0, 0.0], 0.5).unwrap();
    let w: f64 = g.volume_rule(16, 12).iter().map(|(_, w)| w).sum();
    assert!((w - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-10);
}

fn correction_setup() -> (Cutoff, Partition) {
    let c = Cutoff::new(4.0, 2.0).unwrap();
    (c, Partition::build(c).unwrap())
}

#[test]
fn correction_vanishes_off_the_annulus() {
    let (c, p) = correction_setup();
    let corr = Correction::new(&p, &small_flows()[..1], BogovskiiQuadrature::default()).unwrap();
    let mut pts = shell_points(0.5, c.r - 1.0, 40, 7);
    pts.extend(shell_points(c.r, c.r + 1.0, 40, 8));
    for x in pts {
        let at = corr.eval(x);
        assert!(at.jets[0].v.iter().all(|v| v.abs() <= 1e-12));
    }
}

#[test]
fn correction_is_zero_for_zero_flow_and_linear() {
    let (c, p) = correction_setup();
    let zero = zero_flows();
    let z = Correction::new(&p, &zero[..1], BogovskiiQuadrature::default()).unwrap();
    let one = scaled_flows(1.0);
    let two = scaled_flows(2.0);
    let a = Correction::new(&p, &one[..1], BogovskiiQuadrature::default()).unwrap();
    let b = Correction::new(&p, &two[..1], BogovskiiQuadrature::default()).unwrap();
    for x in shell_points(c.r - 1.0, c.r, 20, 9) {
        assert_eq!(z.eval(x).jets[0], VJet::default());
        let (ja, jb) = (a.eval(x).jets[0], b.eval(x).jets[0]);
        for i in 0..3 {
            assert!((2.0 * ja.v[i] - jb.v[i]).abs() <= 1e-12 * (1.0 + jb.v[i].abs()));
            for k in 0..3 {
                assert!((2.0 * ja.g[i][k] - jb.g[i][k]).abs() <= 1e-12 * (1.0 + jb.g[i][k].abs()));
            }
        }
    }
}

#[test]
fn corrected_field_is_solenoidal() {
    let (c, p) = correction_setup();
    let flows = small_flows();
    let corr = Correction::new(&p, &flows[..1], BogovskiiQuadrature::correction()).unwrap();
    let rule = BallRule::new(c.r, c.r0, c.r1, &BallRuleSpec::default());
    let shell: Vec<([f64; 3], f64)> = rule.set.points.iter().zip(&rule.set.weights).filter(|(x, _)| norm(**x) > c.r0 && norm(**x) < c.r1).map(|(x, w)| (*x, *w)).collect();
    let xs: Vec<[f64; 3]> = shell.iter().map(|s| s.0).collect();
    let uc = corr.eval_many(&xs);
    let pf = flows[0].points(&xs);
    let (mut num, mut den, mut grad_r, mut grad_uphi, mut grad_uc) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, (x, w)) in shell.iter().enumerate() {
        let phi = c.jet(*x);
        let uphi = cut_velocity(&pf[i], &phi);
        let r = corrected(&pf[i], &phi, &uc[i].jets[0]);
        num += w * r.div().powi(2);
        den += w * uphi.div().powi(2);
        let g2 = |j: &VJet| j.g.iter().flatten().map(|v| v * v).sum::<f64>();
        grad_r += w * g2(&r);
        grad_uphi += w * g2(&uphi);
        grad_uc += w * g2(&uc[i].jets[0]);
    }
    let ratio = (num / den).sqrt();
    assert!(ratio <= 2e-3, "{ratio}");
    assert!(grad_r.sqrt() <= grad_uphi.sqrt() + grad_uc.sqrt() + 1e-14);
}

#[test]
fn time_derivative_matches_centred_difference() {
    let (c, p) = correction_setup();
    let flows = small_flows();
    let corr = Correction::new(&p, flows, BogovskiiQuadrature::default()).unwrap();
    let dt = flows[1].t - flows[0].t;
    assert!((dt - STEP).abs() < 1e-15);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for x in shell_points(c.r - 1.0, c.r, 30, 10) {
        let at = corr.eval(x);
        for i in 0..3 {
            let fd = (at.jets[2].v[i] - at.jets[0].v[i]) / (2.0 * dt);
            worst = worst.max((fd - at.dt[1][i]).abs());
            scale = scale.max(at.dt[1][i].abs());
        }
    }
    assert!(scale > 0.0);
    assert!(worst <= 1e-3 * scale, "{worst} {scale}");
}

#[test]
fn steady_flow_has_no_time_derivative() {
    let (c, p) = correction_setup();
    let zero = zero_flows();
    let corr = Correction::new(&p, &zero, BogovskiiQuadrature::default()).unwrap();
    for x in shell_points(c.r - 1.0, c.r, 10, 11) {
        assert!(corr.eval(x).dt.iter().all(|d| *d == [0.0; 3]));
    }
}
