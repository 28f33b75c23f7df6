use std::path::Path;
use std::process::{Command, Output};

fn uquant(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uquant"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const UNIFORM: &str = r#"{"schema": 1, "d": 1, "p": 1, "N_list": [4, 8, 16, 32, 64, 128],
    "measure": {"family": "uniform", "params": {"lower": [0], "upper": [1]}}}"#;

#[test]
fn sweep_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "u.json", UNIFORM);
    let out = dir.path().join("out");
    let o = uquant(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--jobs",
        "2",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("regime d=p"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("sweep_summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["theory_slope"], -1.0);
    assert_eq!(summary["records"].as_array().unwrap().len(), 6);
    let dat = std::fs::read_to_string(out.join("sweep.dat")).unwrap();
    assert_eq!(dat.lines().count(), 7);
}

#[test]
fn every_subcommand_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "u.json", UNIFORM);
    let opt = write_config(
        dir.path(),
        "o.json",
        r#"{"schema": 1, "d": 1, "p": 1, "N_list": [4, 8, 16],
            "measure": {"family": "optimality", "params": {"gamma": 0.75, "q": 2}}}"#,
    );
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();
    for (sub, c) in [
        ("quantize", &cfg),
        ("eval", &cfg),
        ("oracle", &cfg),
        ("compare-random", &cfg),
        ("lower-bound", &opt),
    ] {
        let o = uquant(&[sub, "--config", c, "--out", out]);
        assert!(
            o.status.success(),
            "{sub}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    assert!(Path::new(out).join("quantize_N4.csv").exists());
    assert!(Path::new(out).join("oracle.csv").exists());
    assert!(Path::new(out).join("lower_bound.csv").exists());
}

#[test]
fn seed_override_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "b.json",
        r#"{"schema": 1, "d": 1, "p": 1, "N_list": [4, 8], "trials": 1, "seed": 1,
            "measure": {"family": "bernoulli", "params": {"theta": 0.5}}}"#,
    );
    let run = |sub: &str, seed: &str| {
        let out = dir.path().join(format!("{sub}{seed}"));
        let o = uquant(&[
            "compare-random",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert!(o.status.success());
        std::fs::read(out.join("compare_summary.json")).unwrap()
    };
    assert_eq!(run("a", "7"), run("b", "7"));
    let v: serde_json::Value = serde_json::from_slice(&run("c", "9")).unwrap();
    assert_eq!(v["seed"], 9);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(
        dir.path(),
        "x.json",
        r#"{"schema": 1, "d": 1, "p": 1, "N_list": [4], "colour": "red",
            "measure": {"family": "uniform", "params": {"lower": [0], "upper": [1]}}}"#,
    );
    let o = uquant(&["sweep", "--config", &unknown]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
    let unsorted = write_config(
        dir.path(),
        "y.json",
        r#"{"schema": 1, "d": 1, "p": 1, "N_list": [8, 4],
            "measure": {"family": "uniform", "params": {"lower": [0], "upper": [1]}}}"#,
    );
    assert_eq!(
        uquant(&["sweep", "--config", &unsorted]).status.code(),
        Some(2)
    );
    let two_d = write_config(
        dir.path(),
        "z.json",
        r#"{"schema": 1, "d": 2, "p": 1, "N_list": [4], "evaluator": "multiscale-bound",
            "measure": {"family": "uniform", "params": {"lower": [-1, -1], "upper": [1, 1]}}}"#,
    );
    assert_eq!(
        uquant(&["oracle", "--config", &two_d]).status.code(),
        Some(2)
    );
}

#[test]
fn contract_violation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // the rearrangement bound needs p below the family's moment order
    let cfg = write_config(
        dir.path(),
        "p.json",
        r#"{"schema": 1, "d": 1, "p": 2, "N_list": [4],
            "measure": {"family": "pareto", "params": {"q": 1.5}}}"#,
    );
    let o = uquant(&["lower-bound", "--config", &cfg]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn resource_guard_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "g.json",
        r#"{"schema": 1, "d": 2, "p": 1, "N_list": [1048576], "evaluator": "flow-vs-proxy",
            "measure": {"family": "uniform", "params": {"lower": [-1, -1], "upper": [1, 1]}}}"#,
    );
    let o = uquant(&["sweep", "--config", &cfg]);
    assert_eq!(
        o.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}
