use std::fs;

use mfvb::gmm::{cavi_fit, simulate_gmm, FitOptions, GmmInit, GmmModel, GmmPrior, GmmStateJson};
use mfvb::harness::{verify_suite_with, VerifyOptions};
use mfvb::lda::{cavi_fit_lda, disjoint_topic_truth, simulate_lda, LdaFitOptions, LdaInit, LdaStateJson};
use mfvb::MixingMeasure;
use serde_json::Value;

fn validator(name: &str) -> jsonschema::Validator {
    let path = format!("{}/schema/{name}.schema.json", env!("CARGO_MANIFEST_DIR"));
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&schema).unwrap()
}

fn assert_valid(v: &jsonschema::Validator, doc: &Value) {
    let errors: Vec<String> = v.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{errors:#?}");
}

#[test]
fn verify_report_matches_schema() {
    let opts = VerifyOptions { w1_cases: 20, hellinger_pairs: 10, dual_cases: 20, lemma_pairs: 20, fit_replicates: 1, ..Default::default() };
    let report = verify_suite_with(3, &opts);
    let doc = serde_json::to_value(&report).unwrap();
    let v = validator("verify_report");
    assert_valid(&v, &doc);

    let mut bad = doc.clone();
    bad["suites"][0]["extra"] = Value::Bool(true);
    assert!(!v.is_valid(&bad));
}

#[test]
fn gmm_state_matches_schema() {
    let truth = MixingMeasure::from_parts(&[0.5, 0.5], vec![vec![-3.0, 0.0], vec![3.0, 0.0]]).unwrap();
    let data = simulate_gmm(&GmmModel::new(truth), 150, 1).unwrap();
    let prior = GmmPrior::symmetric(2, 1.0, vec![0.0, 0.0], 100.0).unwrap();
    let state = cavi_fit(&data, &prior, GmmInit::Seeded { seed: 2, restarts: 2 }, FitOptions::default()).unwrap();
    let doc = serde_json::to_value(GmmStateJson::from_state(&state)).unwrap();
    assert_valid(&validator("gmm_state"), &doc);
}

#[test]
fn lda_state_matches_schema() {
    let truth = disjoint_topic_truth(12, 2, 4, 0.02, 1).unwrap();
    let corpus = simulate_lda(&truth, 30, 2).unwrap();
    let state = cavi_fit_lda(&corpus, LdaFitOptions::new(2, 0.01, 0.25), LdaInit::Seeded(3)).unwrap();
    let doc = serde_json::to_value(LdaStateJson::from_state(&state)).unwrap();
    assert_valid(&validator("lda_state"), &doc);
}
