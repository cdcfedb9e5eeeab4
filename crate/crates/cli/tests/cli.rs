use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").canonicalize().unwrap()
}

fn svcflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svcflow")).args(args).output().unwrap()
}

/// A two-client scenario over the bundled topology, written into `dir`.
fn small(dir: &Path, extra: &str) -> PathBuf {
    let s = scenarios();
    let text = format!(
        r#"{{"name": "cli", "topology": "{}", "catalog": "{}", "traffic_unit_kbps": 1000000, {extra}
           "clients": [{{"name": "C1", "max_layers": 2, "join_slot": 1}},
                       {{"name": "C2", "max_layers": 3, "join_slot": 2}}]}}"#,
        s.join("default.topology.json").display(),
        s.join("default.catalog.json").display()
    );
    let path = dir.join("cli.scenario.json");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn validate_accepts_the_default_scenario() {
    let path = scenarios().join("default.scenario.json");
    let out = svcflow(&["validate", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok: 5 clients"));
}

#[test]
fn bad_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = small(dir.path(), r#""alpha": -1,"#);
    let out = svcflow(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let missing = dir.path().join("nope.json");
    assert_eq!(svcflow(&["validate", missing.to_str().unwrap()]).status.code(), Some(1));

    let path = small(dir.path(), "");
    let out = svcflow(&["sweep", path.to_str().unwrap(), "--param", "gamma", "--values", "1", "-o", "x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let path = small(dir.path(), "");
    let out_dir = dir.path().join("out");
    let out = svcflow(&["run", path.to_str().unwrap(), "-o", out_dir.to_str().unwrap(), "--solver", "lp"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 stalls"));
    assert!(out_dir.join("manifest.json").is_file());
    let out = svcflow(&["plot", out_dir.to_str().unwrap(), "--family", "quality"]);
    assert!(out.status.success());
    assert!(out_dir.join("plots/quality.svg").is_file());
}

#[test]
fn exhausted_budget_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let path = small(dir.path(), r#""slots": 3, "budget": {"max_nodes": 0},"#);
    let out_dir = dir.path().join("out");
    let out = svcflow(&["run", path.to_str().unwrap(), "-o", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
