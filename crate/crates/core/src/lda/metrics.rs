use crate::error::{Error, Result};
use crate::stats::{hellinger_sq_categorical, SimplexVector};

use super::LdaTruth;

/// Per-document word marginals `B^T gamma_d`.
pub fn word_marginals(params: &LdaTruth) -> Result<Vec<SimplexVector>> {
    let v = params.v();
    params
        .doc_topic
        .iter()
        .map(|gamma| {
            let mut p = vec![0.0; v];
            for (&g, beta) in gamma.as_slice().iter().zip(&params.topic_word) {
                if g == 0.0 {
                    continue;
                }
                for (pi, b) in p.iter_mut().zip(beta.as_slice()) {
                    *pi += g * b;
                }
            }
            SimplexVector::from_weights(&p)
        })
        .collect()
}

/// Average over documents of the squared Hellinger distance between the
/// estimated and true per-word marginals.
pub fn per_word_hellinger_avg(estimate: &LdaTruth, truth: &LdaTruth) -> Result<f64> {
    Error::check_len(truth.num_docs(), estimate.num_docs())?;
    Error::check_len(truth.v(), estimate.v())?;
    let est = word_marginals(estimate)?;
    let tru = word_marginals(truth)?;
    let mut total = 0.0;
    for (p, q) in est.iter().zip(&tru) {
        total += hellinger_sq_categorical(p, q)?;
    }
    Ok(total / tru.len() as f64)
}

/// Squared Hellinger distance between `n` iid draws from two laws whose
/// single-draw squared distance is `h2_word`.
pub fn joint_hellinger_from_word(h2_word: f64, n: usize) -> f64 {
    let bc = (1.0 - 0.5 * h2_word).clamp(0.0, 1.0);
    2.0 - 2.0 * bc.powi(n as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lda::disjoint_topic_truth;

    #[test]
    fn identical_is_zero() {
        let t = disjoint_topic_truth(20, 3, 5, 0.02, 3).unwrap();
        assert_eq!(per_word_hellinger_avg(&t, &t).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_marginals_saturate() {
        let a = SimplexVector::new(vec![1.0, 0.0]).unwrap();
        let b = SimplexVector::new(vec![0.0, 1.0]).unwrap();
        let one = SimplexVector::new(vec![1.0]).unwrap();
        let p = LdaTruth::new(vec![a], vec![one.clone()], None).unwrap();
        let q = LdaTruth::new(vec![b], vec![one], None).unwrap();
        assert!((per_word_hellinger_avg(&p, &q).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn single_topic_reduces_to_categorical() {
        let b1 = SimplexVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        let b2 = SimplexVector::new(vec![0.4, 0.4, 0.2]).unwrap();
        let one = SimplexVector::new(vec![1.0]).unwrap();
        let p = LdaTruth::new(vec![b1.clone()], vec![one.clone()], None).unwrap();
        let q = LdaTruth::new(vec![b2.clone()], vec![one], None).unwrap();
        let direct = hellinger_sq_categorical(&b1, &b2).unwrap();
        assert!((per_word_hellinger_avg(&p, &q).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn label_permutation_invariant() {
        let t = disjoint_topic_truth(30, 3, 6, 0.02, 5).unwrap();
        let e = disjoint_topic_truth(30, 3, 6, 0.02, 6).unwrap();
        let base = per_word_hellinger_avg(&e, &t).unwrap();
        let perm = [2, 0, 1];
        assert!((per_word_hellinger_avg(&e.permuted(&perm), &t).unwrap() - base).abs() < 1e-12);
    }

    #[test]
    fn joint_value() {
        assert_eq!(joint_hellinger_from_word(0.0, 100), 0.0);
        assert!((joint_hellinger_from_word(2.0, 3) - 2.0).abs() < 1e-15);
        assert!((joint_hellinger_from_word(0.1, 1) - 0.1).abs() < 1e-15);
        assert!((joint_hellinger_from_word(0.1, 2) - (2.0 - 2.0 * 0.95f64 * 0.95)).abs() < 1e-15);
    }
}
