use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_icu-acuity"))
        .args(args)
        .env_remove("ICU_ACUITY_CONFIG")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
}

fn p(dir: &Path, rel: &str) -> String {
    dir.join(rel).to_string_lossy().into_owned()
}

#[test]
fn pipeline_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    std::fs::write(d.join("run.toml"), "[model]\nhidden_dim = 8\nmax_epochs = 2\n").unwrap();
    let cfg = p(d, "run.toml");
    ok(&["synth", "--config", &cfg, "--seed", "7", "--n", "200", "--out-dir", &p(d, "data")]);
    ok(&["preprocess", "--events", &p(d, "data/events.csv"), "--outcomes", &p(d, "data/outcomes.csv"), "--out", &p(d, "cohort.bin")]);
    ok(&["train", "--config", &cfg, "--seed", "7", "--cohort", &p(d, "cohort.bin"), "--out-dir", &p(d, "run")]);
    for f in ["model.bin", "training_log.csv", "run_config.toml"] {
        assert!(d.join("run").join(f).is_file(), "missing {f}");
    }

    ok(&["evaluate", "--model", &p(d, "run/model.bin"), "--cohort", &p(d, "cohort.bin"), "--out-dir", &p(d, "eval"), "--iterations", "10"]);
    let auc = std::fs::read_to_string(d.join("eval/auc_gru.csv")).unwrap();
    assert_eq!(auc.lines().count(), 101);

    ok(&["predict", "--model", &p(d, "run/model.bin"), "--cohort", &p(d, "cohort.bin"), "--out-dir", &p(d, "pred"), "--attention"]);
    let first = std::fs::read_dir(d.join("pred/attention")).unwrap().map(|e| e.unwrap().path()).find(|p| p.extension().is_some_and(|e| e == "csv")).unwrap();
    let rows: Vec<Vec<f64>> = std::fs::read_to_string(first)
        .unwrap()
        .lines()
        .skip(1)
        .filter_map(|l| l.split(',').skip(1).map(|v| v.parse::<f64>().ok()).collect::<Option<Vec<f64>>>())
        .collect();
    assert!(!rows.is_empty());
    for (t, row) in rows.iter().enumerate() {
        assert!(row.iter().skip(t + 1).all(|&v| v == 0.0), "row {t} attends to the future");
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["preprocess", "--events", "/nonexistent/e.csv", "--outcomes", "/nonexistent/o.csv", "--out", "/tmp/x.bin"]).status.code(), Some(1));
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("bad.toml"), "[model]\nhiden_dim = 8\n").unwrap();
    let out = run(&["synth", "--config", &p(tmp.path(), "bad.toml"), "--out-dir", &p(tmp.path(), "x")]);
    assert_eq!(out.status.code(), Some(1));
}
