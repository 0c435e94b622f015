use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ars"));
    c.env_remove("ARS_OUT_DIR");
    c
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("configs")
        .join(format!("{name}.toml"))
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn all_finite(v: &Value) -> bool {
    match v {
        Value::Number(n) => n.as_f64().is_some_and(f64::is_finite),
        Value::Array(a) => a.iter().all(all_finite),
        Value::Object(o) => o.values().all(all_finite),
        _ => true,
    }
}

fn edited(name: &str, dir: &Path, edit: impl Fn(&str) -> String) -> PathBuf {
    let text = fs::read_to_string(config(name)).unwrap();
    let path = dir.join(format!("{name}_edited.toml"));
    fs::write(&path, edit(&text)).unwrap();
    path
}

#[test]
fn zero_uncertainty_tracks_reference() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["run", config("zero_uncertainty").to_str().unwrap(), "--out", "o"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/proposed.json")).unwrap()).unwrap();
    assert!(all_finite(&summary));
    assert!(summary["max_e_ref_norm"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn wing_rock_csv_marks_resets() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["run", config("wingrock_proposed").to_str().unwrap(), "--out", "o"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("o/proposed.csv")).unwrap();
    assert!(!csv.contains('\r'));
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let mut seen = header.clone();
    seen.sort_unstable();
    seen.dedup();
    assert_eq!(seen.len(), header.len(), "duplicate column");
    for col in [
        "t",
        "x1",
        "x2",
        "xref1",
        "xref2",
        "u",
        "theta_hat_5",
        "theta_5",
        "e_ref_norm",
        "Omega",
        "gamma2",
    ] {
        assert!(header.contains(&col), "missing {col}");
    }
    let reset = header.iter().position(|c| *c == "reset_flag").unwrap();
    let resets: Vec<f64> = lines
        .map(|l| l.split(',').collect::<Vec<_>>())
        .filter(|f| f[reset] == "1.0")
        .map(|f| f[0].parse().unwrap())
        .collect();
    assert_eq!(resets, vec![8.0, 16.0]);
    let summary: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/proposed.json")).unwrap()).unwrap();
    assert!(all_finite(&summary));
    assert_eq!(summary["reset_times"], serde_json::json!([8.0, 16.0]));
}

#[test]
fn env_var_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited("zero_uncertainty", dir.path(), |t| {
        t.replace("t_end = 24.0", "t_end = 1.0")
    });
    let o = bin()
        .args(["run", path.to_str().unwrap()])
        .env("ARS_OUT_DIR", "from_env")
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("from_env/proposed.csv").exists());
}

#[test]
fn missing_b_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited("wingrock_proposed", dir.path(), |t| {
        t.lines()
            .filter(|l| !l.starts_with("b ="))
            .collect::<Vec<_>>()
            .join("\n")
    });
    let o = run(&["run", path.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("`b`"), "{}", stderr(&o));
}

#[test]
fn unknown_law_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited("wingrock_proposed", dir.path(), |t| {
        t.replace("name = \"proposed\"", "name = \"ekf\"")
    });
    let o = run(&["run", path.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("ekf"));
}

#[test]
fn accept_rejects_config_without_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited("wingrock_proposed", dir.path(), |t| {
        t.lines()
            .filter(|l| !l.starts_with("schedule ="))
            .collect::<Vec<_>>()
            .join("\n")
    });
    let o = run(&["accept", "--config", path.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("schedule"), "{}", stderr(&o));
}

#[test]
fn blowup_exits_with_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    // the memory-based laws leave the RK4 stability region at this step
    let path = edited("wingrock_proposed", dir.path(), |t| {
        t.replace("name = \"proposed\"", "name = \"fe_cmrac\"")
    });
    let o = run(&["run", path.to_str().unwrap(), "--out", "o"], dir.path());
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("blowup at t ="), "{}", stderr(&o));
}

#[test]
fn compare_reports_partial_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "compare",
            config("wingrock_proposed").to_str().unwrap(),
            "--laws",
            "proposed,mrac,fe_cmrac",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    let out = dir.path().join("o");
    assert!(out.join("proposed.csv").exists() && out.join("mrac.csv").exists());
    assert!(!out.join("fe_cmrac.csv").exists());
    let m: Value = serde_json::from_str(&fs::read_to_string(out.join("compare_metrics.json")).unwrap()).unwrap();
    assert!(all_finite(&m));
    let laws = m["laws"].as_array().unwrap();
    let integral = |name: &str| {
        laws.iter().find(|l| l["law"] == name).unwrap()["e_ref_integral"][1]
            .as_f64()
            .unwrap()
    };
    assert!(integral("proposed") < integral("mrac"));
    assert!(laws.iter().any(|l| l["law"] == "fe_cmrac" && l["error"].is_string()));
    let xi = fs::read_to_string(out.join("compare_xi.csv")).unwrap();
    assert_eq!(xi.lines().next().unwrap(), "t,xi_norm_proposed,xi_norm_mrac");
}

#[test]
fn single_law_compare_matches_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = edited("wingrock_proposed", dir.path(), |t| {
        t.replace("t_end = 24.0", "t_end = 5.0")
    });
    let a = run(
        &["run", cfg.to_str().unwrap(), "--out", "a", "--decimation", "50"],
        dir.path(),
    );
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    let b = run(
        &[
            "compare",
            cfg.to_str().unwrap(),
            "--laws",
            "proposed",
            "--out",
            "b",
            "--decimation",
            "50",
        ],
        dir.path(),
    );
    assert_eq!(code(&b), 0, "{}", stderr(&b));
    let read = |d: &str| fs::read(dir.path().join(d).join("proposed.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
}

#[test]
fn sabotaged_lambda1_fails_gamma2_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let path = edited("wingrock_proposed", dir.path(), |t| {
        t.replace("lambda1 = 1100.0", "lambda1 = 0.0")
    });
    let o = run(
        &["accept", "--config", path.to_str().unwrap(), "--criteria", "4"],
        dir.path(),
    );
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("FAIL criterion  4 Gamma2 bounds"), "{out}");
    assert!(stderr(&o).contains("Gamma2 bounds"));
}

#[test]
fn accept_baseline_criterion_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["accept", "--criteria", "1,10", "--seed", "7"], dir.path());
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 2);
}

#[test]
fn bundled_configs_parse() {
    let dir = tempfile::tempdir().unwrap();
    for name in [
        "wingrock_proposed",
        "wingrock_mrac",
        "wingrock_compare_all",
        "zero_uncertainty",
    ] {
        // a short horizon is enough to validate every block
        let path = edited(name, dir.path(), |t| t.replace("t_end = 24.0", "t_end = 0.01"));
        let o = run(&["run", path.to_str().unwrap(), "--out", "o"], dir.path());
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
    }
}
