use clap::{Parser, Subcommand};
use nstruncate::config::ExperimentConfig;
use nstruncate::pipeline::{self, SweepParts};
use nstruncate::{Error, Result};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nstruncate", version, about = "Transfer a whole-space Navier-Stokes solution to a ball and measure the truncation error")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration; the desk defaults apply when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides OUTPUT_DIR and the configured output_dir
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Solve on the periodic box and store the trajectory
    SolveR3,
    /// Cutoff, partition and Bogovskii correction per R
    Localize,
    /// Forcing and tail norms per R, with slope fits
    SweepDecay,
    /// Stokes-basis Galerkin solve per R
    Galerkin,
    /// M, A, D, the forcing threshold and R_min
    Constants,
    /// Weighted inequality audit
    Audit,
    /// Every stage, then the pass/fail summary
    EndToEnd,
}

fn run(cli: &Cli) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(d) = std::env::var_os("OUTPUT_DIR") {
        cfg.output_dir = d.into();
    }
    if let Some(d) = &cli.output_dir {
        cfg.output_dir = d.clone();
    }
    if let Some(j) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| Error::input(e.to_string()))?;
    }
    let root = cfg.output_dir.clone();
    let parts = |localize, decay, galerkin| SweepParts { localize, decay, galerkin };
    match cli.command {
        Command::SolveR3 => {
            let r3 = pipeline::run_solve_r3(&cfg, &root)?;
            println!("solved to T = {} in {} steps, {} frames", r3.traj.final_time(), r3.traj.steps, r3.traj.frames.len());
        }
        Command::Localize => {
            let r3 = pipeline::load_r3(&cfg, &root)?;
            let s = pipeline::run_sweep(&cfg, &r3, &root, parts(true, false, false))?;
            for b in &s.balls {
                let worst = b.divergence_ratio.iter().cloned().fold(0.0, f64::max);
                println!("R = {}: {} pieces, divergence ratio {worst:.3e}, |u_c| off annulus {:.1e}", b.r, b.pieces, b.uc_outside_max);
            }
        }
        Command::SweepDecay => {
            let r3 = pipeline::load_r3(&cfg, &root)?;
            let s = pipeline::run_sweep(&cfg, &r3, &root, parts(false, true, false))?;
            for (q, f) in nstruncate::forcing::fit_slopes(&s.records, cfg.physics.t)? {
                let show = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or("undefined".into());
                println!("{q}: slope {} at T, {} at T/2", show(f.slope_t), show(f.slope_t2));
            }
        }
        Command::Galerkin => {
            let r3 = pipeline::load_r3(&cfg, &root)?;
            let s = pipeline::run_sweep(&cfg, &r3, &root, parts(false, false, true))?;
            for g in &s.galerkin {
                let c = g.envelope.c_fit.map(|c| format!("{c:.3}")).unwrap_or("none".into());
                println!("R = {}: {} modes, N = {:.3e}, eps = {:.3e}, C = {c}, |grad(u - w)(T)| = {:.3e}", g.r, g.modes, g.smallness.n, g.smallness.epsilon, g.transfer_error.last().unwrap_or(&f64::NAN));
            }
        }
        Command::Constants => {
            let r3 = pipeline::load_r3(&cfg, &root)?;
            let c = pipeline::run_constants(&cfg, &r3, &root)?;
            println!("M = {:.4e}, D = {:.4e}, R_min = {:.4e}, eps_max = {:.4e}", c.m, c.d, c.r_min, c.epsilon_threshold);
        }
        Command::Audit => {
            let r3 = pipeline::load_r3(&cfg, &root)?;
            pipeline::run_audit(&cfg, &r3, &root)?;
            println!("wrote {}", root.join("audit").join("audit.csv").display());
        }
        Command::EndToEnd => {
            let e = pipeline::run_end_to_end(&cfg, &root)?;
            for v in &e.verdicts {
                println!("{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.criterion, v.detail);
            }
            return Ok(e.pass);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
