use std::fs;

use mfvb::harness::{
    fit_rate_slope, parse_config, read_rows, run_sweep, verify_suite_with, ExperimentConfig, Metric, RiskRow, RowFlag,
    SweepOptions, VerifyOptions,
};
use mfvb::transport::wasserstein_distance;
use mfvb::{MixingMeasure, Result};

fn small_gmm(k: usize) -> ExperimentConfig {
    let truth = if k == 1 {
        r#"{ "weights": [1.0], "atoms": [[1.0, -1.0]] }"#
    } else {
        r#"{ "weights": [0.5, 0.5], "atoms": [[0.0, 0.0], [5.0, 0.0]] }"#
    };
    parse_config(&format!(
        r#"{{ "schema_version": 1,
              "model": {{ "kind": "gmm", "k": {k}, "d": 2, "truth": {truth} }},
              "n_grid": [100, 200, 400], "replicates": 4, "restarts": 2,
              "metrics": ["w1_sq", "atom_error", "weight_l1"], "risk_samples": 50,
              "master_seed": 11 }}"#
    ))
    .unwrap()
}

#[test]
fn row_counts_and_csv_agree() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let config = small_gmm(2);
    let out = run_sweep(&config, &SweepOptions { threads: Some(2), output: Some(path.clone()) }).unwrap();
    assert_eq!(out.rows.len(), 3 * 4 * 3);
    assert_eq!(out.fits.len(), 3 * 4);
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), out.rows.len() + 1);
    assert_eq!(read_rows(&path).unwrap(), out.rows);
    for r in out.rows.iter().filter(|r| r.metric == Metric::AtomError) {
        assert!(r.point_value <= r.risk_value + 3.0 * r.std_error, "{r:?}");
    }

    // canonical order: n, then replicate, then metric name
    let keys: Vec<(usize, usize, &str)> = out.rows.iter().map(|r| (r.n, r.replicate, r.metric.name())).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn output_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_gmm(2);
    let mut bytes = Vec::new();
    for threads in [1, 3] {
        let path = dir.path().join(format!("t{threads}.csv"));
        run_sweep(&config, &SweepOptions { threads: Some(threads), output: Some(path.clone()) }).unwrap();
        bytes.push(fs::read(&path).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);
}

#[test]
fn one_component_metrics_reduce_to_distances() {
    let out = run_sweep(&small_gmm(1), &SweepOptions::default()).unwrap();
    for chunk in out.rows.chunks(3) {
        let get = |m: Metric| chunk.iter().find(|r| r.metric == m).unwrap();
        let (atom, w1, weight) = (get(Metric::AtomError), get(Metric::W1Sq), get(Metric::WeightL1));
        // with one atom W1 is the Euclidean distance between atoms
        assert!((w1.point_value - atom.point_value.powi(2)).abs() <= 1e-12 * (1.0 + w1.point_value));
        assert_eq!(weight.point_value, 0.0);
        assert_eq!(weight.risk_value, 0.0);
        // Jensen for the convex atom distance: averaged risk dominates the
        // distance of the averaged atom, up to Monte Carlo error
        assert!(atom.risk_value + 3.0 * atom.std_error >= atom.point_value, "{atom:?}");
    }
}

#[test]
fn lda_sweep_rows() {
    let config = parse_config(
        r#"{ "schema_version": 1,
             "model": { "kind": "lda", "k": 2, "v": 12, "docs": 6, "delta0": 0.02, "truth_seed": 3 },
             "n_grid": [30, 60], "replicates": 3, "restarts": 1,
             "metrics": ["per_word_hellinger"], "risk_samples": 20, "master_seed": 5 }"#,
    )
    .unwrap();
    let out = run_sweep(&config, &SweepOptions::default()).unwrap();
    assert_eq!(out.rows.len(), 6);
    for r in &out.rows {
        assert!(r.point_value >= 0.0 && r.point_value <= 2.0);
        assert!(r.risk_value >= 0.0 && r.risk_value <= 2.0);
        assert!(!r.flag.is_set());
    }
    assert!(out.fits.iter().all(|f| f.max_elbo_drop <= 1e-8));
}

#[test]
fn slope_recovers_power_law() {
    let mut rows = Vec::new();
    for (i, n) in [100usize, 200, 400, 800].into_iter().enumerate() {
        for rep in 0..5 {
            let v = 3.0 * (n as f64).powf(-0.75) * (1.0 + 0.01 * rep as f64);
            rows.push(RiskRow {
                n,
                replicate: rep,
                metric: Metric::W1Sq,
                point_value: v,
                risk_value: v,
                std_error: 0.0,
                elbo_final: 0.0,
                iterations: 1,
                seed: i as u64,
                flag: RowFlag::None,
            });
        }
    }
    let report = fit_rate_slope(&rows, Metric::W1Sq).unwrap();
    assert!((report.slope + 0.75).abs() < 1e-10, "{}", report.slope);
    assert!(report.slope_ci95.0 <= report.slope && report.slope <= report.slope_ci95.1);
    assert!(fit_rate_slope(&rows, Metric::AtomError).is_err());
}

#[test]
fn faulty_solver_names_its_suite() {
    fn biased(p: &MixingMeasure, q: &MixingMeasure, r: f64) -> Result<f64> {
        Ok(wasserstein_distance(p, q, r)? + 1e-6)
    }
    let opts = VerifyOptions {
        w1_solver: biased,
        w1_cases: 30,
        hellinger_pairs: 10,
        dual_cases: 50,
        lemma_pairs: 20,
        fit_replicates: 1,
    };
    let report = verify_suite_with(4, &opts);
    assert!(!report.passed);
    assert!(report.failing().contains(&"w1_oracle"));
    assert!(report.suites.iter().any(|s| s.name == "kl_dual" && s.passed));
}
