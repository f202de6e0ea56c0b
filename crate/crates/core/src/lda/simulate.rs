use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{categorical_draw, dirichlet_draw, stream_rng};
use crate::stats::SimplexVector;

use super::{LdaCorpus, LdaTruth};

/// For each document `d` and position `n`: `z ~ Cat(gamma_d)`, `w ~ Cat(beta_z)`.
pub fn simulate_lda(truth: &LdaTruth, n: usize, seed: u64) -> Result<LdaCorpus> {
    if n == 0 {
        return Err(Error::invalid("documents need at least one word"));
    }
    truth.validate()?;
    let mut rng = stream_rng(seed, 0x4c44_4153);
    let mut docs = Vec::with_capacity(truth.num_docs());
    let mut topics = Vec::with_capacity(truth.num_docs());
    for gamma in &truth.doc_topic {
        let mut words = Vec::with_capacity(n);
        let mut zs = Vec::with_capacity(n);
        for _ in 0..n {
            let z = categorical_draw(&mut rng, gamma.as_slice());
            words.push(categorical_draw(&mut rng, truth.topic_word[z].as_slice()));
            zs.push(z);
        }
        docs.push(words);
        topics.push(zs);
    }
    Ok(LdaCorpus { docs, vocab_size: truth.v(), topic_truth: Some(topics), seed })
}

/// Sparse vector on `support` with every nonzero entry at least `delta0`.
fn floored_row<R: Rng>(rng: &mut R, len: usize, support: &[usize], delta0: f64) -> Result<SimplexVector> {
    let free = 1.0 - delta0 * support.len() as f64;
    if free < 0.0 {
        return Err(Error::invalid("delta0 too large for the support size"));
    }
    let w = dirichlet_draw(rng, &vec![1.0; support.len()]);
    let mut row = vec![0.0; len];
    for (&i, wi) in support.iter().zip(w) {
        row[i] = delta0 + free * wi;
    }
    SimplexVector::from_weights(&row)
}

/// A sparse truth whose topics have disjoint, contiguous word supports and
/// whose documents each use a random nonempty subset of topics.
pub fn disjoint_topic_truth(v: usize, k: usize, num_docs: usize, delta0: f64, seed: u64) -> Result<LdaTruth> {
    if k == 0 || v < k || num_docs == 0 {
        return Err(Error::invalid("need 1 <= K <= V and at least one document"));
    }
    if !(delta0 > 0.0 && delta0 < 1.0) {
        return Err(Error::invalid("delta0 must lie in (0, 1)"));
    }
    let mut rng = stream_rng(seed, 0x5452_4c44);
    let mut topic_word = Vec::with_capacity(k);
    for t in 0..k {
        let lo = t * v / k;
        let hi = (t + 1) * v / k;
        let support: Vec<usize> = (lo..hi).collect();
        topic_word.push(floored_row(&mut rng, v, &support, delta0)?);
    }
    let mut doc_topic = Vec::with_capacity(num_docs);
    let all: Vec<usize> = (0..k).collect();
    for _ in 0..num_docs {
        let size = rng.gen_range(1..=k);
        let mut support: Vec<usize> = all.choose_multiple(&mut rng, size).copied().collect();
        support.sort_unstable();
        doc_topic.push(floored_row(&mut rng, k, &support, delta0)?);
    }
    LdaTruth::new(topic_word, doc_topic, Some(delta0))
}
