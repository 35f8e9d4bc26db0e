use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn qdsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdsim"))
        .args(args)
        .output()
        .unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qdsim-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn passing_experiment_exits_zero_with_config_echo() {
    let out = qdsim(&["ground-state-check", "--seed", "7"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert_eq!(v["experiment"], "ground-state-check");
    assert_eq!(v["config"]["seed"], 7);
    assert_eq!(v["pass"], true);
}

#[test]
fn same_seed_gives_identical_output() {
    let a = qdsim(&["teleportation-stats", "--seed", "3"]);
    let b = qdsim(&["teleportation-stats", "--seed", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_and_seed_override() {
    let cfg = scratch("algebra.toml");
    std::fs::write(&cfg, "seed = 11\nstates = 3\nconfigs = 4\n").unwrap();
    let out = qdsim(&["stabilizer-algebra", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["config"]["seed"], 11);
    assert_eq!(v["report"]["states"], 3);
    let out = qdsim(&[
        "stabilizer-algebra",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "12",
    ]);
    assert_eq!(json(&out)["config"]["seed"], 12);
}

#[test]
fn output_flag_writes_a_file() {
    let path = scratch("group.json");
    let out = qdsim(&["group-suite", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
}

#[test]
fn bad_configs_exit_two() {
    let cfg = scratch("bad.toml");
    std::fs::write(&cfg, "statez = 3\n").unwrap();
    assert_eq!(
        qdsim(&["stabilizer-algebra", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    let cfg = scratch("subgroup.json");
    std::fs::write(&cfg, r#"{"subgroup": 42}"#).unwrap();
    assert_eq!(
        qdsim(&["wall-crossing", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        qdsim(&["group-suite", "--config", "/nonexistent/qdsim.toml"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        qdsim(&["group-suite", "--memory-budget", "plenty"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn memory_budget_is_enforced() {
    let out = qdsim(&["double-exchange", "--memory-budget", "1K"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
    // Without a gauge frame the protocol states do not fit in the default budget.
    assert_eq!(
        qdsim(&["double-exchange", "--gauge-fixed", "false"])
            .status
            .code(),
        Some(3)
    );
}

#[test]
fn invariant_failure_exits_one() {
    // Too few shots for the tail statistics to be meaningful.
    let cfg = scratch("few.toml");
    std::fs::write(&cfg, "trials = 2\n").unwrap();
    let out = qdsim(&[
        "teleportation-stats",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["pass"], false);
}

#[test]
fn oversized_lattice_is_a_resource_error() {
    let cfg = scratch("big.toml");
    std::fs::write(
        &cfg,
        "[lattice]\nwidth = 20\nheight = 20\nboundary = \"torus\"\n",
    )
    .unwrap();
    let out = qdsim(&["ground-state-check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
