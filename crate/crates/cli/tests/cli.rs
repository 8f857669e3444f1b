use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn rashba(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rashba")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run_config(dir: &TempDir, text: &str, extra: &[&str]) -> (Output, PathBuf) {
    let cfg = write(dir.path(), "scenario.toml", text);
    let out = dir.path().join("out");
    let mut args = vec!["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (rashba(&args), out)
}

fn csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(path: &Path, name: &str) -> Vec<String> {
    let (header, rows) = csv(path);
    let i = header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"));
    rows.into_iter().map(|r| r[i].clone()).collect()
}

const SMALL_IDENTITIES: &str = r#"
name = "small-identities"
model = "validate:identities"
seed = 3
[grid]
nx1 = 16
nx2 = 16
np1 = 32
np2 = 32
pmax = 8.0
[validate]
trials = 2
"#;

#[test]
fn identities_scenario_passes_with_report() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run_config(&dir, SMALL_IDENTITIES, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report = out.join("identities.csv");
    for col in ["theta_mass", "theta_momentum", "theta_plus"] {
        let vals = column(&report, col);
        assert_eq!(vals.len(), 2);
        assert!(vals.iter().all(|v| v.parse::<f64>().unwrap() < 1e-7), "{col}: {vals:?}");
    }
    assert!(column(&out.join("checks.csv"), "pass").iter().all(|p| p == "true"));
}

#[test]
fn heat_kernel_snapshots_track_the_exact_solution() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("heat");
    let o = rashba(&["--scenario", "heat-kernel", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let index = out.join("snapshots.csv");
    let t = column(&index, "t");
    let err = column(&index, "l2_error");
    assert_eq!(t.last().unwrap(), "0.1");
    assert!(err.last().unwrap().parse::<f64>().unwrap() < 1e-4);
    for f in column(&index, "file") {
        let head = std::fs::read_to_string(out.join(&f)).unwrap();
        assert!(head.starts_with("rashba-snapshot 1"));
    }
}

#[test]
fn both_models_share_a_time_axis() {
    let dir = TempDir::new().unwrap();
    let text = r#"
name = "pair"
model = "both"
[grid]
nx1 = 8
nx2 = 8
np1 = 16
np2 = 16
dt = 0.01
[params]
alpha = 0.0
tau = 0.05
kappa = 0.05
[initial]
kind = "gaussian-bump"
background = 2.0
width = 1.0
[output]
t_end = 0.04
interval = 0.02
"#;
    let (o, out) = run_config(&dir, text, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(column(&out.join("diagnostics.csv"), "t"), ["0.0", "0.02", "0.04"]);
    let paired = out.join("paired_density.csv");
    let times = column(&paired, "t");
    assert_eq!(times.len(), 3 * 64);
    assert!(column(&paired, "qdd_n0").iter().all(|v| v.parse::<f64>().unwrap() > 0.0));
    for i in 0..3 {
        assert!(out.join(format!("snapshots/kinetic_{i:04}.snap")).is_file());
        assert!(out.join(format!("snapshots/qdd_{i:04}.snap")).is_file());
    }
}

#[test]
fn invalid_parameter_exits_2_with_line() {
    let dir = TempDir::new().unwrap();
    let (o, out) = run_config(&dir, "model = \"kinetic\"\n[params]\nepsilon = -1\n", &[]);
    assert_eq!(code(&o), 2);
    let e = stderr(&o);
    assert!(e.contains("ε must be positive"), "{e}");
    assert!(e.contains("line 3"), "{e}");
    assert!(!out.exists(), "nothing is written for invalid scenarios");
}

#[test]
fn unknown_key_exits_2() {
    let dir = TempDir::new().unwrap();
    let (o, _) = run_config(&dir, "model = \"qdd\"\n[grid]\nnx = 16\n", &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("nx"), "{}", stderr(&o));
}

#[test]
fn missing_files_exit_2() {
    let o = rashba(&["--config", "/nonexistent/scenario.toml"]);
    assert_eq!(code(&o), 2);
    let dir = TempDir::new().unwrap();
    let (o, _) = run_config(&dir, "model = \"qdd\"\n[initial]\nkind = \"tabulated\"\nfile = \"absent.snap\"\n", &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("absent.snap"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&rashba(&[])), 2);
    assert_eq!(code(&rashba(&["--bogus"])), 2);
    assert_eq!(code(&rashba(&["--scenario", "no-such-thing"])), 2);
    assert_eq!(code(&rashba(&["--scenario", "pauli", "--set", "novalue"])), 2);
}

#[test]
fn failed_check_exits_1() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("strict");
    let o = rashba(&["--scenario", "pauli", "--out", out.to_str().unwrap(), "--set", "validate.tolerance=1e-300"]);
    assert_eq!(code(&o), 1);
    let manifest = std::fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("status = \"failed\""));
    assert!(column(&out.join("checks.csv"), "pass").contains(&"false".to_string()));
}

#[test]
fn numerical_abort_exits_3_and_keeps_partial_output() {
    let dir = TempDir::new().unwrap();
    let text = r#"
name = "blow-up"
model = "qdd"
[grid]
nx1 = 8
nx2 = 8
np1 = 8
np2 = 8
[potential]
kind = "fourier"
modes = [{ m = [3, 0], amplitude = 1e308 }]
[output]
t_end = 0.01
interval = 0.005
"#;
    let (o, out) = run_config(&dir, text, &[]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("non-finite"));
    let manifest = std::fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("status = \"aborted\""));
    assert!(out.join("snapshots/density_0000.snap").is_file());
    assert!(column(&out.join("diagnostics.csv"), "step").contains(&"0".to_string()));
}

#[test]
fn identical_scenarios_give_identical_outputs() {
    let dir = TempDir::new().unwrap();
    let text = r#"
name = "repeat"
model = "kinetic"
seed = 11
[grid]
nx1 = 8
nx2 = 8
np1 = 16
np2 = 16
dt = 0.02
[potential]
kind = "fourier"
modes = [{ m = [1, 1], amplitude = 0.3 }]
[initial]
kind = "spin-helix"
[output]
t_end = 0.06
interval = 0.03
encoding = "binary"
"#;
    let cfg = write(dir.path(), "s.toml", text);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = rashba(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let files = ["diagnostics.csv", "snapshots.csv", "snapshots/density_0001.snap", "snapshots/density_0002.snap"];
    for f in files {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn overrides_and_canonical_form_round_trip() {
    let dir = TempDir::new().unwrap();
    let o = rashba(&["--scenario", "moyal", "--set", "params.epsilon=0.25", "--set", "seed=5", "--print-config"]);
    assert_eq!(code(&o), 0);
    let canonical = String::from_utf8(o.stdout).unwrap();
    assert!(canonical.contains("epsilon = 0.25"));
    assert!(canonical.contains("seed = 5"));
    let cfg = write(dir.path(), "c.toml", &canonical);
    let again = rashba(&["--config", cfg.to_str().unwrap(), "--print-config"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), canonical);
}

#[test]
fn tabulated_initial_reads_a_previous_snapshot() {
    let dir = TempDir::new().unwrap();
    let first = r#"
name = "first"
model = "qdd"
[grid]
nx1 = 8
nx2 = 8
np1 = 8
np2 = 8
[initial]
kind = "spin-helix"
[output]
t_end = 0.01
interval = 0.01
"#;
    let (o, out) = run_config(&dir, first, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let second = "name = \"second\"\nmodel = \"qdd\"\n[grid]\nnx1 = 8\nnx2 = 8\nnp1 = 8\nnp2 = 8\n[initial]\nkind = \"tabulated\"\nfile = \"out/snapshots/density_0001.snap\"\n[output]\nt_end = 0.01\ninterval = 0.01\n";
    let cfg = write(dir.path(), "second.toml", second);
    let out2 = dir.path().join("out2");
    let o = rashba(&["--config", cfg.to_str().unwrap(), "--out", out2.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let a = std::fs::read_to_string(out.join("snapshots/density_0001.snap")).unwrap();
    let b = std::fs::read_to_string(out2.join("snapshots/density_0000.snap")).unwrap();
    let payload = |s: &str| s.split_once("end\n").unwrap().1.to_string();
    assert_eq!(payload(&a), payload(&b));
}

#[test]
fn list_covers_every_model() {
    let o = rashba(&["--list-scenarios"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for m in ["kinetic", "qdd", "both", "validate:identities", "validate:diffusion", "validate:moyal", "validate:pauli"] {
        assert!(text.contains(m), "{m} not listed");
    }
    let covered: Vec<u32> = text
        .lines()
        .filter_map(|l| l.split_once("(acceptance ").and_then(|(_, r)| r.split_once(')')).map(|(ids, _)| ids.to_string()))
        .flat_map(|ids| ids.split(|c: char| !c.is_ascii_digit()).filter_map(|n| n.parse().ok()).collect::<Vec<u32>>())
        .collect();
    for id in 1..=10 {
        assert!(covered.contains(&id), "acceptance {id} has no built-in scenario");
    }
}
