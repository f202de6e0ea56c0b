//! Latent Dirichlet allocation: synthetic corpora with sparse truths,
//! coordinate-ascent variational inference and per-word Hellinger error.
//!
//! Word ids and topic labels are 0-based in memory; the corpus file format
//! is 1-based.

mod cavi;
mod io;
mod metrics;
mod simulate;

pub use cavi::{cavi_fit_lda, point_estimate_lda, sample_lda_variational, LdaFitOptions, LdaInit};
pub use io::{
    parse_corpus, read_corpus, read_sidecar, render_corpus, write_corpus, CorpusSidecar, LdaStateJson,
    TOKEN_ELISION_THRESHOLD,
};
pub use metrics::{joint_hellinger_from_word, per_word_hellinger_avg, word_marginals};
pub use simulate::{disjoint_topic_truth, simulate_lda};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::SimplexVector;

/// Symmetric sparse concentrations `(1/V^c, 1/K^c)` for `c > 1`.
pub fn sparse_dirichlet_prior(v: usize, k: usize, c: f64) -> Result<(f64, f64)> {
    if v < 2 || k < 2 {
        return Err(Error::invalid("sparse prior needs V >= 2 and K >= 2"));
    }
    if !(c > 1.0) || !c.is_finite() {
        return Err(Error::invalid(format!("sparsity exponent must exceed 1, got {c}")));
    }
    Ok(((v as f64).powf(-c), (k as f64).powf(-c)))
}

/// A corpus of `D` documents over a vocabulary of `V` words.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaCorpus {
    pub docs: Vec<Vec<usize>>,
    pub vocab_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_truth: Option<Vec<Vec<usize>>>,
    #[serde(default)]
    pub seed: u64,
}

impl LdaCorpus {
    pub fn new(docs: Vec<Vec<usize>>, vocab_size: usize) -> Result<Self> {
        let c = Self { docs, vocab_size, topic_truth: None, seed: 0 };
        c.validate()?;
        Ok(c)
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.docs.is_empty() {
            return Err(Error::invalid("corpus has no documents"));
        }
        if self.vocab_size == 0 {
            return Err(Error::invalid("vocabulary must be nonempty"));
        }
        for (d, doc) in self.docs.iter().enumerate() {
            if let Some(w) = doc.iter().find(|&&w| w >= self.vocab_size) {
                return Err(Error::invalid(format!("document {d} has word id {w} outside the vocabulary")));
            }
        }
        Ok(())
    }

    /// `true` when every document has the same length.
    pub fn equal_lengths(&self) -> bool {
        self.docs.windows(2).all(|w| w[0].len() == w[1].len())
    }
}

/// Topic-word matrix `B` (K rows over V words) and doc-topic proportions
/// (D rows over K topics). Also the shape of an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaTruth {
    pub topic_word: Vec<SimplexVector>,
    pub doc_topic: Vec<SimplexVector>,
    /// Lower bound on nonzero entries, when the truth is declared sparse.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta0: Option<f64>,
}

impl LdaTruth {
    pub fn new(topic_word: Vec<SimplexVector>, doc_topic: Vec<SimplexVector>, delta0: Option<f64>) -> Result<Self> {
        let t = Self { topic_word, doc_topic, delta0 };
        t.validate()?;
        Ok(t)
    }

    pub fn k(&self) -> usize {
        self.topic_word.len()
    }

    pub fn v(&self) -> usize {
        self.topic_word.first().map_or(0, SimplexVector::len)
    }

    pub fn num_docs(&self) -> usize {
        self.doc_topic.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.topic_word.is_empty() || self.doc_topic.is_empty() {
            return Err(Error::invalid("truth needs at least one topic and one document"));
        }
        let v = self.v();
        for row in &self.topic_word {
            Error::check_len(v, row.len())?;
        }
        for row in &self.doc_topic {
            Error::check_len(self.k(), row.len())?;
        }
        if let Some(d0) = self.delta0 {
            let small = self
                .topic_word
                .iter()
                .chain(&self.doc_topic)
                .flat_map(|r| r.as_slice().iter())
                .any(|&x| x > 0.0 && x < d0 - 1e-12);
            if small {
                return Err(Error::invalid(format!("a nonzero entry is below delta0 = {d0}")));
            }
        }
        Ok(())
    }

    /// Support sets of each topic (`S^beta_k`).
    pub fn topic_supports(&self) -> Vec<Vec<usize>> {
        support_sets(&self.topic_word)
    }

    /// Support sets of each document's topic proportions (`S^gamma_d`).
    pub fn doc_supports(&self) -> Vec<Vec<usize>> {
        support_sets(&self.doc_topic)
    }

    /// Apply a topic relabeling to both matrices.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            topic_word: perm.iter().map(|&j| self.topic_word[j].clone()).collect(),
            doc_topic: self.doc_topic.iter().map(|g| g.permuted(perm)).collect(),
            delta0: self.delta0,
        }
    }
}

fn support_sets(rows: &[SimplexVector]) -> Vec<Vec<usize>> {
    rows.iter()
        .map(|r| r.as_slice().iter().enumerate().filter(|(_, &x)| x > 0.0).map(|(i, _)| i).collect())
        .collect()
}

/// Mean-field state `prod_k q(beta_k) prod_d [q(theta_d) prod_n q(z_dn)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaVariationalState {
    /// `K x V` Dirichlet parameters.
    pub topic_word_posterior: Vec<Vec<f64>>,
    /// `D x K` Dirichlet parameters.
    pub doc_topic_posterior: Vec<Vec<f64>>,
    /// Per document, per token: a distribution over topics.
    pub token_resp: Vec<Vec<Vec<f64>>>,
    pub elbo_trace: Vec<f64>,
    #[serde(default)]
    pub iterations: usize,
    #[serde(default)]
    pub converged: bool,
    /// How many Dirichlet parameters hit the positivity floor.
    #[serde(default)]
    pub floor_hits: usize,
}

impl LdaVariationalState {
    pub fn k(&self) -> usize {
        self.topic_word_posterior.len()
    }

    pub fn max_elbo_drop(&self) -> f64 {
        self.elbo_trace.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
    }

    /// Relabel topics: output topic `k` is input topic `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let p = |row: &Vec<f64>| perm.iter().map(|&j| row[j]).collect::<Vec<f64>>();
        Self {
            topic_word_posterior: perm.iter().map(|&j| self.topic_word_posterior[j].clone()).collect(),
            doc_topic_posterior: self.doc_topic_posterior.iter().map(p).collect(),
            token_resp: self.token_resp.iter().map(|doc| doc.iter().map(p).collect()).collect(),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_prior_values() {
        let (b, g) = sparse_dirichlet_prior(100, 10, 2.0).unwrap();
        assert!((b - 1e-4).abs() < 1e-18 && (g - 1e-2).abs() < 1e-16);
        let (b, g) = sparse_dirichlet_prior(7, 7, 1.5).unwrap();
        assert_eq!(b, g);
        assert!(sparse_dirichlet_prior(100, 10, 1.0).is_err());
        assert!(sparse_dirichlet_prior(1, 10, 2.0).is_err());
    }

    #[test]
    fn corpus_validation() {
        assert!(LdaCorpus::new(vec![vec![0, 3]], 3).is_err());
        assert!(LdaCorpus::new(vec![], 3).is_err());
        assert!(LdaCorpus::new(vec![vec![0, 2], vec![1, 1]], 3).unwrap().equal_lengths());
    }

    #[test]
    fn truth_delta0_check() {
        let row = SimplexVector::new(vec![0.99, 0.01]).unwrap();
        let g = SimplexVector::new(vec![1.0]).unwrap();
        assert!(LdaTruth::new(vec![row.clone()], vec![g.clone()], Some(0.02)).is_err());
        let t = LdaTruth::new(vec![row], vec![g], Some(0.01)).unwrap();
        assert_eq!(t.topic_supports(), vec![vec![0, 1]]);
    }
}
