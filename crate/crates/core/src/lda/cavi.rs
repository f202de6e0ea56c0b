use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{categorical_draw, derive_seed, dirichlet_draw, stream_rng};
use crate::stats::{digamma, ln_gamma, log_sum_exp, SimplexVector};

use super::{LdaCorpus, LdaTruth, LdaVariationalState};

/// Dirichlet parameters below this are raised to it (and counted).
pub(crate) const PARAM_FLOOR: f64 = 1e-12;
const RESP_FLOOR: f64 = 1e-300;
/// Mass spread uniformly over topics when seeding token responsibilities.
const SEED_SMOOTHING: f64 = 0.1;
const LLOYD_ITERS: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdaFitOptions {
    pub k: usize,
    pub eta_beta: f64,
    pub eta_gamma: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
}

impl LdaFitOptions {
    pub fn new(k: usize, eta_beta: f64, eta_gamma: f64) -> Self {
        Self { k, eta_beta, eta_gamma, tol: 1e-8, max_iter: 1000, restarts: 1 }
    }
}

#[derive(Debug, Clone)]
pub enum LdaInit {
    /// Start from an explicit state; token responsibilities are recomputed
    /// from its Dirichlet blocks on the first sweep.
    State(LdaVariationalState),
    /// Word co-occurrence clustering seeded from `seed`.
    Seeded(u64),
}

fn e_log_dirichlet(alpha: &[f64]) -> Vec<f64> {
    let psi_sum = digamma(alpha.iter().sum()).expect("positive concentration");
    alpha.iter().map(|&a| digamma(a).expect("positive concentration") - psi_sum).collect()
}

/// `lnB(a0) - lnB(a) + sum (a0 - a) E[log x]`: the prior-minus-entropy
/// contribution of one Dirichlet block.
fn dirichlet_block(a0: f64, a: &[f64], e_log: &[f64]) -> f64 {
    let len = a.len() as f64;
    let mut t = ln_gamma(a0 * len) - len * ln_gamma(a0) - ln_gamma(a.iter().sum());
    for (&ai, &el) in a.iter().zip(e_log) {
        t += ln_gamma(ai) + (a0 - ai) * el;
    }
    t
}

impl LdaVariationalState {
    fn e_log_beta(&self) -> Vec<Vec<f64>> {
        self.topic_word_posterior.iter().map(|l| e_log_dirichlet(l)).collect()
    }

    /// `q(z_dn)` given the two Dirichlet blocks.
    pub fn update_token_resp(&mut self, corpus: &LdaCorpus) {
        let k = self.k();
        let e_log_beta = self.e_log_beta();
        let mut logits = vec![0.0; k];
        self.token_resp.resize(corpus.num_docs(), Vec::new());
        for ((doc, resp), gamma) in corpus.docs.iter().zip(self.token_resp.iter_mut()).zip(&self.doc_topic_posterior) {
            let e_log_theta = e_log_dirichlet(gamma);
            resp.resize(doc.len(), vec![0.0; k]);
            for (&w, row) in doc.iter().zip(resp.iter_mut()) {
                for (j, l) in logits.iter_mut().enumerate() {
                    *l = e_log_theta[j] + e_log_beta[j][w];
                }
                let lse = log_sum_exp(&logits).expect("K >= 1");
                row.resize(k, 0.0);
                for (r, l) in row.iter_mut().zip(&logits) {
                    let p = (l - lse).exp();
                    *r = if p < RESP_FLOOR { 0.0 } else { p };
                }
            }
        }
    }

    /// `q(theta_d) = Dir(eta_gamma + sum_n phi_dn)`.
    pub fn update_doc_topic(&mut self, eta_gamma: f64) {
        let k = self.k_from_resp();
        let mut hits = 0;
        self.doc_topic_posterior = self
            .token_resp
            .iter()
            .map(|resp| {
                let mut g = vec![eta_gamma; k];
                for row in resp {
                    for (gi, r) in g.iter_mut().zip(row) {
                        *gi += r;
                    }
                }
                hits += floor_params(&mut g);
                g
            })
            .collect();
        self.floor_hits += hits;
    }

    /// `q(beta_k) = Dir(eta_beta + sum_{d,n} phi_dnk e_{w_dn})`.
    pub fn update_topic_word(&mut self, corpus: &LdaCorpus, eta_beta: f64) {
        let mut lambda = vec![vec![eta_beta; corpus.vocab_size]; self.k_from_resp()];
        for (doc, resp) in corpus.docs.iter().zip(&self.token_resp) {
            for (&w, row) in doc.iter().zip(resp) {
                for (l, r) in lambda.iter_mut().zip(row) {
                    l[w] += r;
                }
            }
        }
        for l in &mut lambda {
            self.floor_hits += floor_params(l);
        }
        self.topic_word_posterior = lambda;
    }

    fn k_from_resp(&self) -> usize {
        self.token_resp.iter().flatten().next().map_or_else(|| self.k(), Vec::len)
    }

    /// Closed-form evidence lower bound.
    pub fn elbo(&self, corpus: &LdaCorpus, eta_beta: f64, eta_gamma: f64) -> Result<f64> {
        Error::check_len(corpus.num_docs(), self.doc_topic_posterior.len())?;
        Error::check_len(corpus.num_docs(), self.token_resp.len())?;
        let e_log_beta = self.e_log_beta();
        let mut total = 0.0;
        for ((doc, resp), gamma) in corpus.docs.iter().zip(&self.token_resp).zip(&self.doc_topic_posterior) {
            Error::check_len(doc.len(), resp.len())?;
            let e_log_theta = e_log_dirichlet(gamma);
            for (&w, row) in doc.iter().zip(resp) {
                for (j, &r) in row.iter().enumerate() {
                    if r > 0.0 {
                        total += r * (e_log_theta[j] + e_log_beta[j][w] - r.ln());
                    }
                }
            }
            total += dirichlet_block(eta_gamma, gamma, &e_log_theta);
        }
        for (lambda, elb) in self.topic_word_posterior.iter().zip(&e_log_beta) {
            total += dirichlet_block(eta_beta, lambda, elb);
        }
        Ok(total)
    }
}

fn floor_params(v: &mut [f64]) -> usize {
    let mut hits = 0;
    for x in v.iter_mut() {
        if *x < PARAM_FLOOR {
            *x = PARAM_FLOOR;
            hits += 1;
        }
    }
    hits
}

fn check_options(corpus: &LdaCorpus, opts: &LdaFitOptions) -> Result<()> {
    corpus.validate()?;
    if opts.k == 0 {
        return Err(Error::invalid("K must be positive"));
    }
    let ok = |x: f64| x > 0.0 && x.is_finite();
    if !ok(opts.eta_beta) || !ok(opts.eta_gamma) {
        return Err(Error::invalid("concentrations must be positive and finite"));
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::invalid("tol and max_iter must be positive"));
    }
    Ok(())
}

/// Coordinate ascent: token responsibilities, then doc-topic Dirichlets,
/// then topic-word Dirichlets, until the ELBO gain of a sweep is below `tol`.
pub fn cavi_fit_lda(corpus: &LdaCorpus, opts: LdaFitOptions, init: LdaInit) -> Result<LdaVariationalState> {
    check_options(corpus, &opts)?;
    match init {
        LdaInit::State(state) => {
            Error::check_len(opts.k, state.k())?;
            Error::check_len(corpus.num_docs(), state.doc_topic_posterior.len())?;
            for l in &state.topic_word_posterior {
                Error::check_len(corpus.vocab_size, l.len())?;
            }
            let has_resp = state.token_resp.len() == corpus.num_docs()
                && state
                    .token_resp
                    .iter()
                    .zip(&corpus.docs)
                    .all(|(r, d)| r.len() == d.len() && r.iter().all(|row| row.len() == opts.k));
            run(state, corpus, &opts, has_resp)
        }
        LdaInit::Seeded(seed) => {
            let mut best: Option<LdaVariationalState> = None;
            for restart in 0..opts.restarts.max(1) {
                let state = seeded_state(corpus, &opts, derive_seed(seed, &[restart as u64]));
                let fitted = run(state, corpus, &opts, true)?;
                if best.as_ref().is_none_or(|b| fitted.elbo_trace.last() > b.elbo_trace.last()) {
                    best = Some(fitted);
                }
            }
            Ok(best.expect("at least one restart"))
        }
    }
}

fn run(mut state: LdaVariationalState, corpus: &LdaCorpus, opts: &LdaFitOptions, has_resp: bool) -> Result<LdaVariationalState> {
    let (eb, eg) = (opts.eta_beta, opts.eta_gamma);
    state.elbo_trace.clear();
    state.converged = false;
    if has_resp {
        let e0 = state.elbo(corpus, eb, eg)?;
        if !e0.is_finite() {
            return Err(Error::NonFinite { iteration: 0, what: "ELBO".into() });
        }
        state.elbo_trace.push(e0);
    }
    for iter in 1..=opts.max_iter {
        state.update_token_resp(corpus);
        state.update_doc_topic(eg);
        state.update_topic_word(corpus, eb);
        let value = state.elbo(corpus, eb, eg)?;
        if !value.is_finite() {
            return Err(Error::NonFinite { iteration: iter, what: "ELBO".into() });
        }
        let prev = state.elbo_trace.last().copied();
        state.elbo_trace.push(value);
        state.iterations = iter;
        if prev.is_some_and(|p| (value - p).abs() < opts.tol) {
            state.converged = true;
            break;
        }
    }
    if state.floor_hits > 0 {
        log::warn!("{} Dirichlet parameters were floored at {PARAM_FLOOR}", state.floor_hits);
    }
    Ok(state)
}

/// Cluster words by their smoothed co-occurrence profiles, then give each
/// token most of its mass on its word's cluster.
fn seeded_state(corpus: &LdaCorpus, opts: &LdaFitOptions, seed: u64) -> LdaVariationalState {
    let k = opts.k;
    let labels = cooccurrence_clusters(corpus, k, seed);
    let token_resp = corpus
        .docs
        .iter()
        .map(|doc| {
            doc.iter()
                .map(|&w| {
                    if k == 1 {
                        return vec![1.0];
                    }
                    let mut row = vec![SEED_SMOOTHING / k as f64; k];
                    row[labels[w]] += 1.0 - SEED_SMOOTHING;
                    row
                })
                .collect()
        })
        .collect();
    let mut state = LdaVariationalState {
        topic_word_posterior: vec![Vec::new(); k],
        doc_topic_posterior: Vec::new(),
        token_resp,
        elbo_trace: Vec::new(),
        iterations: 0,
        converged: false,
        floor_hits: 0,
    };
    state.update_doc_topic(opts.eta_gamma);
    state.update_topic_word(corpus, opts.eta_beta);
    state
}

/// Weighted k-means++ plus Lloyd iterations on square-root co-occurrence
/// profiles. Returns a cluster label per word.
fn cooccurrence_clusters(corpus: &LdaCorpus, k: usize, seed: u64) -> Vec<usize> {
    let v = corpus.vocab_size;
    if k == 1 {
        return vec![0; v];
    }
    let mut freq = vec![0.0; v];
    let mut cooc = vec![vec![0.0; v]; v];
    for doc in &corpus.docs {
        let mut counts = vec![0.0; v];
        for &w in doc {
            counts[w] += 1.0;
        }
        let present: Vec<usize> = (0..v).filter(|&w| counts[w] > 0.0).collect();
        for &a in &present {
            freq[a] += counts[a];
            for &b in &present {
                cooc[a][b] += counts[a] * if a == b { counts[b] - 1.0 } else { counts[b] };
            }
        }
    }
    let smooth = 1.0 / v as f64;
    let profiles: Vec<Vec<f64>> = cooc
        .iter()
        .map(|row| {
            let total: f64 = row.iter().sum::<f64>() + smooth * v as f64;
            row.iter().map(|c| ((c + smooth) / total).sqrt()).collect()
        })
        .collect();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();

    let mut rng = stream_rng(seed, 0x4c44_4149);
    let weights: Vec<f64> = freq.iter().map(|f| f + 1e-9).collect();
    let mut centers: Vec<Vec<f64>> = vec![profiles[categorical_draw(&mut rng, &weights)].clone()];
    let mut d2: Vec<f64> = profiles.iter().map(|p| dist(p, &centers[0])).collect();
    while centers.len() < k.min(v) {
        let score: Vec<f64> = d2.iter().zip(&weights).map(|(d, w)| d * w).collect();
        let idx = if score.iter().sum::<f64>() > 0.0 {
            categorical_draw(&mut rng, &score)
        } else {
            rng.gen_range(0..v)
        };
        centers.push(profiles[idx].clone());
        let last = centers.len() - 1;
        for (d, p) in d2.iter_mut().zip(&profiles) {
            *d = d.min(dist(p, &centers[last]));
        }
    }
    let mut labels = vec![0; v];
    for _ in 0..LLOYD_ITERS {
        let mut changed = false;
        for (w, p) in profiles.iter().enumerate() {
            let best = (0..centers.len())
                .min_by(|&a, &b| dist(p, &centers[a]).total_cmp(&dist(p, &centers[b])))
                .expect("nonempty");
            changed |= best != labels[w];
            labels[w] = best;
        }
        for (c, center) in centers.iter_mut().enumerate() {
            let mut acc = vec![0.0; v];
            let mut mass = 0.0;
            for (w, p) in profiles.iter().enumerate().filter(|(w, _)| labels[*w] == c) {
                mass += weights[w];
                for (a, x) in acc.iter_mut().zip(p) {
                    *a += weights[w] * x;
                }
            }
            if mass > 0.0 {
                *center = acc.into_iter().map(|a| a / mass).collect();
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

/// Dirichlet means of both blocks.
pub fn point_estimate_lda(state: &LdaVariationalState) -> Result<LdaTruth> {
    let mean = |rows: &[Vec<f64>]| rows.iter().map(|r| SimplexVector::from_weights(r)).collect::<Result<Vec<_>>>();
    LdaTruth::new(mean(&state.topic_word_posterior)?, mean(&state.doc_topic_posterior)?, None)
}

/// One joint draw of `(B, Gamma)` from the variational posterior.
pub fn sample_lda_variational(state: &LdaVariationalState, seed: u64) -> Result<LdaTruth> {
    let mut rng = stream_rng(seed, 0x4c44_4144);
    let mut draw = |rows: &[Vec<f64>]| -> Result<Vec<SimplexVector>> {
        rows.iter().map(|r| SimplexVector::from_weights(&dirichlet_draw(&mut rng, r))).collect()
    };
    let topic_word = draw(&state.topic_word_posterior)?;
    let doc_topic = draw(&state.doc_topic_posterior)?;
    LdaTruth::new(topic_word, doc_topic, None)
}
