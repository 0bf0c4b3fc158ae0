#![allow(dead_code)]

use nstruncate::flow::FlowAt;
use nstruncate::initial::band_limited_initial_data;
use nstruncate::solver::{NseSolver, Trajectory};
use nstruncate::GridSpec;
use std::sync::OnceLock;

pub const STEP: f64 = 1e-3;

/// A short run on a coarse box: three frames at 0, STEP and 2 STEP.
pub fn small_trajectory(amplitude: f64) -> Trajectory<f64> {
    let grid = GridSpec::new(24, 16.0).unwrap();
    let solver = NseSolver::<f64>::new(grid, 1.0).unwrap();
    let (u, _) = band_limited_initial_data::<f64>(grid, 2.0, 7, amplitude, 2, 0.1).unwrap();
    solver.run(solver.state_from_spectral(u, 0.0), 2.0 * STEP, STEP).unwrap()
}

pub fn flows_of(traj: &Trajectory<f64>) -> Vec<FlowAt> {
    traj.frames.iter().map(|f| FlowAt::new(traj, f.t).unwrap()).collect()
}

pub fn small_flows() -> &'static [FlowAt] {
    static F: OnceLock<Vec<FlowAt>> = OnceLock::new();
    F.get_or_init(|| flows_of(&small_trajectory(20.0)))
}

pub fn scaled_flows(s: f64) -> Vec<FlowAt> {
    flows_of(&small_trajectory(20.0 * s))
}

pub fn zero_flows() -> Vec<FlowAt> {
    flows_of(&small_trajectory(0.0))
}

/// Points uniformly distributed in the shell a < |x| < b.
pub fn shell_points(a: f64, b: f64, n: usize, seed: u64) -> Vec<[f64; 3]> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let r = rng.gen_range(a.powi(3)..b.powi(3)).cbrt();
            let z: f64 = rng.gen_range(-1.0..1.0);
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let s = (1.0 - z * z).sqrt();
            [r * s * t.cos(), r * s * t.sin(), r * z]
        })
        .collect()
}
