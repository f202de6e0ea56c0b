use mfvb::lda::{
    cavi_fit_lda, disjoint_topic_truth, per_word_hellinger_avg, point_estimate_lda, simulate_lda, sparse_dirichlet_prior,
    LdaCorpus, LdaFitOptions, LdaInit, LdaStateJson,
};
use mfvb::transport::assignment;

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

#[test]
fn single_topic_counts() {
    let corpus = LdaCorpus::new(vec![vec![0, 1, 1], vec![2, 1]], 4).unwrap();
    let state = cavi_fit_lda(&corpus, LdaFitOptions::new(1, 0.5, 0.3), LdaInit::Seeded(1)).unwrap();
    assert!(state.token_resp.iter().flatten().all(|r| r == &vec![1.0]));
    assert_eq!(state.topic_word_posterior[0], vec![1.5, 3.5, 1.5, 0.5]);
    assert_eq!(state.doc_topic_posterior, vec![vec![3.3], vec![2.3]]);
}

#[test]
fn identical_documents_share_posteriors() {
    let truth = disjoint_topic_truth(30, 3, 1, 0.02, 4).unwrap();
    let one = simulate_lda(&truth, 80, 5).unwrap();
    let mut docs = one.docs.clone();
    docs.push(one.docs[0].clone());
    docs.extend(simulate_lda(&disjoint_topic_truth(30, 3, 3, 0.02, 6).unwrap(), 80, 7).unwrap().docs);
    let corpus = LdaCorpus::new(docs, 30).unwrap();
    let state = cavi_fit_lda(&corpus, LdaFitOptions::new(3, 0.01, 0.1), LdaInit::Seeded(2)).unwrap();
    assert_eq!(state.doc_topic_posterior[0], state.doc_topic_posterior[1]);
}

#[test]
fn recovers_disjoint_topics() {
    let truth = disjoint_topic_truth(50, 3, 20, 0.02, 11).unwrap();
    let corpus = simulate_lda(&truth, 200, 12).unwrap();
    let (eb, eg) = sparse_dirichlet_prior(50, 3, 2.0).unwrap();
    let mut opts = LdaFitOptions::new(3, eb, eg);
    opts.restarts = 3;
    let state = cavi_fit_lda(&corpus, opts, LdaInit::Seeded(13)).unwrap();
    assert!(state.max_elbo_drop() <= 1e-8, "drop {}", state.max_elbo_drop());
    let est = point_estimate_lda(&state).unwrap();

    // empirical word frequencies inside each true-topic token group
    let z = corpus.topic_truth.as_ref().unwrap();
    let mut empirical = vec![vec![0.0; 50]; 3];
    for (doc, zs) in corpus.docs.iter().zip(z) {
        for (&w, &k) in doc.iter().zip(zs) {
            empirical[k][w] += 1.0;
        }
    }
    for row in &mut empirical {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x /= s);
    }

    let cost: Vec<Vec<f64>> = truth
        .topic_word
        .iter()
        .map(|t| est.topic_word.iter().map(|e| tv(t.as_slice(), e.as_slice())).collect())
        .collect();
    let (perm, _) = assignment(&cost).unwrap();
    for k in 0..3 {
        let e = est.topic_word[perm[k]].as_slice();
        assert!(tv(e, truth.topic_word[k].as_slice()) < 0.1, "topic {k} vs truth");
        assert!(tv(e, &empirical[k]) < 0.1, "topic {k} vs empirical");
    }
    assert!(per_word_hellinger_avg(&est, &truth).unwrap() < 0.05);
}

#[test]
fn elbo_monotone_and_resp_rows_valid() {
    for seed in 0..10 {
        let truth = disjoint_topic_truth(40, 4, 15, 0.02, seed).unwrap();
        let corpus = simulate_lda(&truth, 60, seed + 100).unwrap();
        let state = cavi_fit_lda(&corpus, LdaFitOptions::new(4, 1e-3, 0.05), LdaInit::Seeded(seed)).unwrap();
        assert!(state.max_elbo_drop() <= 1e-8, "seed {seed}: drop {}", state.max_elbo_drop());
        for row in state.token_resp.iter().flatten() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
        assert!(state.topic_word_posterior.iter().flatten().all(|&x| x > 0.0));
    }
}

#[test]
fn permuting_initialization_permutes_result() {
    let truth = disjoint_topic_truth(30, 3, 10, 0.02, 21).unwrap();
    let corpus = simulate_lda(&truth, 50, 22).unwrap();
    let mut opts = LdaFitOptions::new(3, 0.01, 0.1);
    opts.max_iter = 5;
    let start = cavi_fit_lda(&corpus, opts, LdaInit::Seeded(23)).unwrap();
    opts.max_iter = 200;
    let perm = [1, 2, 0];
    let a = cavi_fit_lda(&corpus, opts, LdaInit::State(start.clone())).unwrap();
    let b = cavi_fit_lda(&corpus, opts, LdaInit::State(start.permuted(&perm))).unwrap();
    let a = a.permuted(&perm);
    let close = |x: &Vec<Vec<f64>>, y: &Vec<Vec<f64>>| {
        x.iter().flatten().zip(y.iter().flatten()).all(|(p, q)| (p - q).abs() <= 1e-8 * (1.0 + p.abs()))
    };
    assert!(close(&a.topic_word_posterior, &b.topic_word_posterior));
    assert!(close(&a.doc_topic_posterior, &b.doc_topic_posterior));
}

#[test]
fn untouched_symmetric_state_gives_uniform_rows() {
    let corpus = LdaCorpus::new(vec![vec![]], 4).unwrap();
    let state = cavi_fit_lda(&corpus, LdaFitOptions::new(2, 0.2, 0.7), LdaInit::Seeded(0)).unwrap();
    let est = point_estimate_lda(&state).unwrap();
    assert!(est.topic_word.iter().all(|r| r.as_slice().iter().all(|&x| (x - 0.25).abs() < 1e-15)));
    assert!(est.doc_topic[0].as_slice().iter().all(|&x| (x - 0.5).abs() < 1e-15));
}

#[test]
fn state_json_round_trip() {
    let truth = disjoint_topic_truth(12, 2, 3, 0.05, 31).unwrap();
    let corpus = simulate_lda(&truth, 20, 32).unwrap();
    let state = cavi_fit_lda(&corpus, LdaFitOptions::new(2, 0.1, 0.1), LdaInit::Seeded(33)).unwrap();
    let json = serde_json::to_string(&LdaStateJson::from_state(&state)).unwrap();
    let back: LdaStateJson = serde_json::from_str(&json).unwrap();
    assert_eq!(back.into_state().unwrap(), state);
}

#[test]
fn rejects_bad_options() {
    let corpus = LdaCorpus::new(vec![vec![0]], 2).unwrap();
    assert!(cavi_fit_lda(&corpus, LdaFitOptions::new(2, 0.0, 0.1), LdaInit::Seeded(0)).is_err());
    assert!(cavi_fit_lda(&corpus, LdaFitOptions::new(0, 0.1, 0.1), LdaInit::Seeded(0)).is_err());
}
