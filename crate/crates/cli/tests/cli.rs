use std::path::Path;
use std::process::{Command, Output};

fn bohmflow(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bohmflow"))
        .args(args)
        .env("BOHMFLOW_OUT", out)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn missing_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = bohmflow(&["run", "missing.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("config not found"), "{}", stderr(&o));
    assert!(stderr(&o).contains("kind=config_not_found"));
}

#[test]
fn invalid_dt_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[evolver]\ndt = -1.0\n").unwrap();
    let o = bohmflow(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("key=evolver.dt"), "{}", stderr(&o));
}

#[test]
fn unknown_key_strict_versus_lenient() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.toml");
    std::fs::write(&cfg, "[scenario]\nname = \"hermiticity_pair\"\n[evolver]\nstepz = 3\n").unwrap();
    let strict = bohmflow(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(strict.status.code(), Some(1));
    assert!(stderr(&strict).contains("evolver.stepz"));
    let lenient = bohmflow(&["run", cfg.to_str().unwrap(), "--lenient"], dir.path());
    assert_eq!(lenient.status.code(), Some(0), "{}", stderr(&lenient));
}

#[test]
fn accept_then_inspect_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = bohmflow(&["accept", "hermiticity_pair"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("criterion 7: PASS"));
    let dump = dir.path().join("hermiticity_pair").join("coherent.cfield");
    let i = bohmflow(&["inspect", dump.to_str().unwrap()], dir.path());
    assert_eq!(i.status.code(), Some(0), "{}", stderr(&i));
    let text = stdout(&i);
    assert!(text.contains("dims: 512"), "{text}");
    let norm: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("norm: "))
        .expect("norm line")
        .parse()
        .unwrap();
    assert!((norm - 1.0).abs() < 1e-10, "{norm}");

    let csv = dir.path().join("hermiticity_pair").join("acceptance.csv");
    let c = bohmflow(&["inspect", csv.to_str().unwrap()], dir.path());
    assert!(stdout(&c).contains("columns: scenario,criterion"), "{}", stdout(&c));
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = bohmflow(
        &["accept", "hermiticity_pair", "--override", "scenario.thresholds.defect_floor=1e3"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("criterion 7: FAIL"));
    assert!(stderr(&o).contains("acceptance_failed"));
}

#[test]
fn numerical_abort_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("stiff.toml");
    std::fs::write(
        &cfg,
        "[scenario]\nname = \"toy_chaos_sweep\"\n[scenario.params]\ncouplings = [1e6]\n[lyapunov]\nsteps = 2000\n",
    )
    .unwrap();
    let o = bohmflow(&["lyapunov", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("kind=non_finite"));
}

#[test]
fn run_writes_snapshots_and_traj_honours_starts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fg.toml");
    std::fs::write(&cfg, "[scenario]\nname = \"free_gaussian\"\n[evolver]\nsteps = 100\n[trajectory]\nstarts = [[0.5], [-1.0]]\n").unwrap();
    let out = dir.path().join("explicit");
    let o = bohmflow(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.join("free_gaussian").join("psi_000100.cfield").is_file());
    assert!(out.join("free_gaussian").join("timeseries.csv").is_file());

    let t = bohmflow(&["traj", cfg.to_str().unwrap()], dir.path());
    assert_eq!(t.status.code(), Some(0), "{}", stderr(&t));
    let batch = std::fs::read_to_string(dir.path().join("free_gaussian").join("trajectories.csv")).unwrap();
    assert_eq!(batch.lines().filter(|l| !l.starts_with('#')).count(), 3);
}
