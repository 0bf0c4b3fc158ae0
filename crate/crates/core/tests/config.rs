use nstruncate::config::ExperimentConfig;
use nstruncate::Error;

fn config_path(text: &str) -> String {
    match ExperimentConfig::parse(text) {
        Err(Error::Config { path, .. }) => path,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn defaults_are_the_desk_experiment() {
    let c = ExperimentConfig::parse("").unwrap();
    assert_eq!(c, ExperimentConfig::default());
    assert_eq!((c.grid.n, c.grid.l), (48, 32.0));
    assert_eq!(c.sweep.r_list, vec![4.0, 6.0, 8.0, 10.0]);
}

#[test]
fn unknown_keys_report_their_path() {
    assert_eq!(config_path("[grid]\nN = 32\nbogus = 1\n"), "grid.bogus");
    assert_eq!(config_path("[galerkin.quadrature]\nwhat = 2\n"), "galerkin.quadrature.what");
    assert_eq!(config_path("[physics]\nnu = \"one\"\n"), "physics.nu");
}

#[test]
fn out_of_range_values_report_their_path() {
    assert_eq!(config_path("[sweep]\nR_list = [4.0, 20.0]\n"), "sweep.R_list[1]");
    assert_eq!(config_path("[sweep]\nR_list = []\n"), "sweep.R_list");
    assert_eq!(config_path("[sweep]\na_targets = [1.5]\n"), "sweep.a_targets[0]");
    assert_eq!(config_path("[physics]\nnu = -1.0\n"), "physics.nu");
    assert_eq!(config_path("[constants]\nC = 0.5\n"), "constants.C");
}

#[test]
fn hash_ignores_formatting_and_tracks_values() {
    let a = ExperimentConfig::parse("[grid]\nN = 32\n").unwrap();
    let b = ExperimentConfig::parse("# comment\n[grid]\n  L = 32.0\n  N   = 32\n").unwrap();
    let c = ExperimentConfig::parse("[grid]\nN = 40\n").unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
    assert_eq!(a.hash().len(), 64);
}

#[test]
fn toml_roundtrip() {
    let a = ExperimentConfig::parse("[data]\nseed = 11\n[sweep]\nR_list = [4.0, 5.0]\n").unwrap();
    let b = ExperimentConfig::parse(&a.to_toml()).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.hash(), b.hash());
}

#[test]
fn missing_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(ExperimentConfig::load(&dir.path().join("none.toml")), Err(Error::Config { .. })));
}
