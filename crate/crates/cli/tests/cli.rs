use std::path::Path;
use std::process::{Command, Output};

fn nstruncate(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nstruncate"))
        .args(args)
        .arg("--output-dir")
        .arg(out)
        .env_remove("OUTPUT_DIR")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &str = "[grid]\nN = 16\nL = 16.0\n[physics]\nT = 0.02\ndt = 0.01\n[sweep]\nR_list = [4.0]\n";

#[test]
fn unknown_key_is_an_input_error_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[physics]\nnu = 1.0\nviscosity = 2.0\n").unwrap();
    let o = nstruncate(&["solve-r3", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("physics.viscosity"), "{}", stderr(&o));
}

#[test]
fn out_of_range_radius_names_the_entry() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[sweep]\nR_list = [4.0, 40.0]\n").unwrap();
    let o = nstruncate(&["localize", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sweep.R_list[1]"), "{}", stderr(&o));
}

#[test]
fn galerkin_before_solve_names_the_missing_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let o = nstruncate(&["galerkin"], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("trajectory.bin"), "{}", stderr(&o));
}

#[test]
fn solve_is_reproducible_and_checked_against_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let c = cfg.to_str().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = nstruncate(&["solve-r3", "--config", c, "--jobs", "1"], out);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let read = |p: &Path| std::fs::read(p.join("r3").join("trajectory.bin")).unwrap();
    assert_eq!(read(&a), read(&b));
    let manifest = std::fs::read_to_string(a.join("r3").join("manifest.json")).unwrap();
    assert!(manifest.contains("config_hash"), "{manifest}");

    let other = dir.path().join("d.toml");
    std::fs::write(&other, SMALL.replace("N = 16", "N = 24")).unwrap();
    let o = nstruncate(&["constants", "--config", other.to_str().unwrap()], &a);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("solve-r3"), "{}", stderr(&o));
}
