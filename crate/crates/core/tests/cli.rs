use std::fs;
use std::process::Command;

fn mfvb() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mfvb"))
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, r#"{ "schema_version": 1, "model": { "kind": "gmm", "k": 0, "d": 1 } }"#).unwrap();
    let out = mfvb().arg("gmm-sweep").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));

    let out = mfvb().args(["gmm-sweep", "/nonexistent/config.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_then_slope() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    let csv = dir.path().join("rows.csv");
    fs::write(
        &config,
        r#"{ "schema_version": 1,
             "model": { "kind": "gmm", "k": 2, "d": 1,
                        "truth": { "weights": [0.5, 0.5], "atoms": [[-3.0], [3.0]] } },
             "n_grid": [100, 400], "replicates": 3, "restarts": 2,
             "metrics": ["w1_sq"], "risk_samples": 20, "master_seed": 9 }"#,
    )
    .unwrap();
    let out = mfvb().arg("gmm-sweep").arg(&config).arg("--out").arg(&csv).args(["--threads", "2"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 7);

    let out = mfvb().arg("slope").arg(&csv).args(["--metric", "w1_sq"]).output().unwrap();
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["slope"].as_f64().unwrap() < 0.0);

    let out = mfvb().arg("slope").arg(&csv).args(["--metric", "bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gmm_fit_writes_state() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("y.txt");
    let mut text = String::from("# two clusters\n");
    for i in 0..40 {
        let x = if i % 2 == 0 { -4.0 } else { 4.0 } + 0.01 * i as f64;
        text.push_str(&format!("{x}, {}\n", 0.5 * x));
    }
    fs::write(&data, text).unwrap();
    let state = dir.path().join("state.json");
    let out = mfvb().arg("gmm-fit").arg(&data).args(["--k", "2", "--seed", "3", "--out"]).arg(&state).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&state).unwrap()).unwrap();
    assert!(json.is_object());
}

#[test]
fn lda_fit_reads_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("docs.txt");
    fs::write(&corpus, "1 2 1 2 1\n3 4 4 3\n1 1 2\n4 3 3\n").unwrap();
    let out = mfvb().arg("lda-fit").arg(&corpus).args(["--k", "2"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(json.is_object());
}

#[test]
fn prior_mass_request() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("pm.json");
    fs::write(
        &spec,
        r#"{ "alpha": 1.0, "variance": 1.0, "m": 500, "seed": 2,
             "neighborhood": { "center_weights": [0.5, 0.5], "center_atoms": [[0.0], [0.5]],
                               "eps_pi": 0.3, "eps_mu": 0.5 } }"#,
    )
    .unwrap();
    let out = mfvb().arg("prior-mass").arg(&spec).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(json["joint"]["estimate"].as_f64().unwrap() >= 0.0);
}

#[test]
fn verify_reports_each_suite() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("verify.jsonl");
    let out = mfvb().arg("verify").arg("--out").arg(&report).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    for name in ["w1_oracle", "hellinger_cross_check", "kl_dual", "elbo_monotonicity", "delta_nonnegative", "lemma1_atom_bound"] {
        assert!(stdout.contains(&format!("PASS {name}")), "{stdout}");
    }
    // the stated weight bound is violated (see README); the run reports failure
    assert!(stdout.contains("FAIL lemma1_weight_bound"));
    assert_eq!(out.status.code(), Some(1));
    let line = fs::read_to_string(&report).unwrap();
    let json: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
    assert_eq!(json["schema"], "mfvb.verify_report.v1");
    assert_eq!(json["suites"].as_array().unwrap().len(), 7);
}
