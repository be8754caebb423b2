use std::path::Path;
use std::process::{Command, Output};

use smse_core::ExperimentConfig;

fn smse(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smse"))
        .args(args)
        .current_dir(dir)
        .env_remove("SMSE_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = smse(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn bounds_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["bounds", "--out", "run"]);
    let csv = read(dir.path().join("run/bounds.csv"));
    let lines: Vec<&str> = csv.split("\r\n").filter(|l| !l.is_empty()).collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("combiner,placement,m,n,k,t,omega"));
    assert!(lines[1].starts_with("mr,uniform,512,2,10,1000,3,10,100,"));
    assert!(lines[2].starts_with("zf,"));
}

#[test]
fn manifest_round_trips_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["optimize-n", "--out", "run", "--seed", "9", "--set", "system.k=20", "--set", "geometry.placement=ring"]);
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path().join("run/manifest.json"))).unwrap();
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["command"], "optimize-n");
    assert_eq!(manifest["seed"], 9);
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
    let cfg: ExperimentConfig = serde_json::from_value(manifest["config"].clone()).unwrap();
    assert_eq!(cfg.system.k, 20);
    assert_eq!(cfg.montecarlo.seed, 9);
    let from_toml = ExperimentConfig::from_toml(&read(dir.path().join("run/config.toml"))).unwrap();
    assert_eq!(cfg, from_toml);

    // Re-running from the written config reproduces the tables.
    ok(dir.path(), &["optimize-n", "--config", "run/config.toml", "--out", "again"]);
    assert_eq!(read(dir.path().join("run/optimize_n.csv")), read(dir.path().join("again/optimize_n.csv")));
}

#[test]
fn repeated_sweeps_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        ok(dir.path(), &["sweep", "--axis", "M", "--values", "64..1024:32", "--out", out]);
    }
    for name in ["sweep.csv", "n_star.csv"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let n_star = read(dir.path().join("a/n_star.csv"));
    assert_eq!(n_star.split("\r\n").filter(|l| !l.is_empty()).count(), 1 + 31 * 2);
}

#[test]
fn presets_drive_paired_sweeps() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["sweep", "--preset", "fig9", "--out", "run"]);
    for name in ["sweep.csv", "n_star.csv", "sweep_paired.csv", "n_star_paired.csv"] {
        assert!(dir.path().join("run").join(name).exists(), "{name}");
    }
    let paired = read(dir.path().join("run/n_star_paired.csv"));
    assert!(paired.lines().nth(1).unwrap().starts_with("omega,1,d_m,10,"));
}

#[test]
fn exit_codes_separate_failure_classes() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| smse(dir.path(), args).status.code().unwrap();
    assert_eq!(code(&["bounds", "--set", "system.t=20", "--out", "x"]), 3);
    assert_eq!(code(&["bounds", "--set", "system.combiners=[\"zf\"]", "--set", "system.m=16", "--out", "x"]), 3);
    assert_eq!(code(&["bounds", "--preset", "fig99"]), 2);
    assert_eq!(code(&["bounds", "--set", "system.omega=2", "--out", "x"]), 2);
    assert_eq!(code(&["sweep", "--out", "x"]), 2);
    assert_eq!(code(&["nonsense"]), 2);

    let text = ExperimentConfig::default().to_toml().replace("omega = 3\n", "");
    std::fs::write(dir.path().join("missing.toml"), text).unwrap();
    let out = smse(dir.path(), &["bounds", "--config", "missing.toml", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("omega"));
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_smse"))
        .args(["optimize-spacing"])
        .current_dir(dir.path())
        .env("SMSE_OUT_DIR", "from-env")
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = read(dir.path().join("from-env/spacing.csv"));
    assert!(csv.lines().nth(1).unwrap().starts_with("2,100,60,100,"));
}

#[test]
fn monte_carlo_commands_at_small_budgets() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["--set", "geometry.placement=ring", "--set", "system.m=64", "--set", "system.k=3"];
    let args: Vec<&str> = ["simulate", "--draws", "1000", "--out", "sim"].iter().copied().chain(common).collect();
    ok(dir.path(), &args);
    let sim = read(dir.path().join("sim/simulate.csv"));
    assert_eq!(sim.lines().count(), 1 + 2 * 3 * 2);

    let args: Vec<&str> = ["tightness", "--combiner", "mr", "--draws", "1000", "--set", "montecarlo.mi_samples=2000", "--out", "t"]
        .iter()
        .copied()
        .chain(common)
        .collect();
    ok(dir.path(), &args);
    let t = read(dir.path().join("t/tightness.csv"));
    let row: Vec<&str> = t.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[4], "mr");
    assert_eq!(row[13], "oracle");
    let rel: f64 = row[12].parse().unwrap();
    assert!(rel.abs() < 0.1, "{rel}");

    ok(dir.path(), &["moments", "--set", "montecarlo.moment_samples=2000", "--out", "m"]);
    assert_eq!(read(dir.path().join("m/moments.csv")).lines().count(), 20);
}
