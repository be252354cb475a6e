//! Exit codes and artifacts of the `specflow` binary.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_specflow"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("specflow-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const CIRCLE: &str = "model = \"circle\"\ncutoff = 40\nr = [10]\n[[gauge.terms]]\ndirection = 1\nmode = [0]\nim = [[0.3]]\n";

#[test]
fn verify_passes_and_writes_artifacts() {
    let dir = scratch("verify");
    let cfg = dir.join("c.toml");
    std::fs::write(&cfg, CIRCLE).unwrap();
    let out = dir.join("out");
    let status = bin().args(["verify", "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("verify.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains(",plus,"));
    assert!(std::fs::read_to_string(out.join("manifest.txt")).unwrap().contains("command verify"));
}

#[test]
fn gate_failure_exits_one() {
    let dir = scratch("gate");
    let cfg = dir.join("c.toml");
    std::fs::write(&cfg, format!("{CIRCLE}[tolerances]\nidentity = 0.0\n")).unwrap();
    let status = bin().args(["verify", "--config"]).arg(&cfg).arg("--out").arg(dir.join("out")).status().unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn config_and_usage_errors_exit_two() {
    let dir = scratch("config");
    let cfg = dir.join("c.toml");
    std::fs::write(&cfg, format!("{CIRCLE}colour = \"red\"\n")).unwrap();
    let status = bin().args(["flow", "--config"]).arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = bin().args(["mehler", "--config"]).arg(dir.join("missing.toml")).status().unwrap();
    assert_eq!(status.code(), Some(2));
    let status = bin().args(["plot", "--config", "x"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn shipped_configs_parse() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in std::fs::read_dir(&root).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            specflow_core::harness::Experiment::from_file(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
    }
}
