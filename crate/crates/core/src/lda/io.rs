use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{LdaCorpus, LdaTruth, LdaVariationalState};

/// Token responsibilities are dropped from serialized states above this many tokens.
pub const TOKEN_ELISION_THRESHOLD: usize = 1_000_000;

pub const LDA_STATE_SCHEMA: &str = "mfvb.lda_state.v1";

/// Optional JSON companion of a corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSidecar {
    pub vocab_size: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<LdaTruth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// One document per line, space-separated 1-based word ids. Blank lines are
/// empty documents. Without `vocab_size` the largest id is used.
pub fn parse_corpus(text: &str, vocab_size: Option<usize>) -> Result<LdaCorpus> {
    let mut docs = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let doc = line
            .split_whitespace()
            .map(|tok| match tok.parse::<usize>() {
                Ok(id) if id >= 1 => Ok(id - 1),
                _ => Err(Error::invalid(format!("line {}: bad word id {tok:?}", line_no + 1))),
            })
            .collect::<Result<Vec<_>>>()?;
        docs.push(doc);
    }
    let v = vocab_size.unwrap_or_else(|| docs.iter().flatten().max().map_or(0, |m| m + 1));
    LdaCorpus::new(docs, v)
}

pub fn render_corpus(corpus: &LdaCorpus) -> String {
    let mut out = String::new();
    for doc in &corpus.docs {
        let line: Vec<String> = doc.iter().map(|w| (w + 1).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_sidecar(path: &Path) -> Result<CorpusSidecar> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config { path: path.display().to_string(), message: e.to_string() })
}

/// Read a corpus, using `<path>.json` as sidecar when it exists.
pub fn read_corpus(path: &Path) -> Result<(LdaCorpus, Option<CorpusSidecar>)> {
    let text = fs::read_to_string(path)?;
    let side_path = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.json", ext.to_string_lossy()),
        None => "json".to_string(),
    });
    let sidecar = if side_path.exists() { Some(read_sidecar(&side_path)?) } else { None };
    let mut corpus = parse_corpus(&text, sidecar.as_ref().map(|s| s.vocab_size))?;
    if let Some(seed) = sidecar.as_ref().and_then(|s| s.seed) {
        corpus.seed = seed;
    }
    Ok((corpus, sidecar))
}

/// Write the corpus file and, when given, its sidecar next to it.
pub fn write_corpus(path: &Path, corpus: &LdaCorpus, sidecar: Option<&CorpusSidecar>) -> Result<()> {
    fs::write(path, render_corpus(corpus))?;
    if let Some(s) = sidecar {
        let side_path = path.with_extension(match path.extension() {
            Some(ext) => format!("{}.json", ext.to_string_lossy()),
            None => "json".to_string(),
        });
        let json = serde_json::to_string_pretty(s).map_err(|e| Error::Io(e.to_string()))?;
        fs::write(side_path, json)?;
    }
    Ok(())
}

/// On-disk form of a fitted LDA state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdaStateJson {
    pub schema: String,
    pub k: usize,
    pub vocab_size: usize,
    pub num_docs: usize,
    pub num_tokens: usize,
    pub topic_word_posterior: Vec<Vec<f64>>,
    pub doc_topic_posterior: Vec<Vec<f64>>,
    pub token_resp: Option<Vec<Vec<Vec<f64>>>>,
    pub token_resp_elided: bool,
    pub elbo_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub floor_hits: usize,
}

impl LdaStateJson {
    pub fn from_state(state: &LdaVariationalState) -> Self {
        let tokens: usize = state.token_resp.iter().map(Vec::len).sum();
        let elided = tokens > TOKEN_ELISION_THRESHOLD;
        Self {
            schema: LDA_STATE_SCHEMA.to_string(),
            k: state.k(),
            vocab_size: state.topic_word_posterior.first().map_or(0, Vec::len),
            num_docs: state.doc_topic_posterior.len(),
            num_tokens: tokens,
            topic_word_posterior: state.topic_word_posterior.clone(),
            doc_topic_posterior: state.doc_topic_posterior.clone(),
            token_resp: (!elided).then(|| state.token_resp.clone()),
            token_resp_elided: elided,
            elbo_trace: state.elbo_trace.clone(),
            iterations: state.iterations,
            converged: state.converged,
            floor_hits: state.floor_hits,
        }
    }

    pub fn into_state(self) -> Result<LdaVariationalState> {
        if self.schema != LDA_STATE_SCHEMA {
            return Err(Error::Config { path: "schema".into(), message: format!("unknown schema {}", self.schema) });
        }
        Error::check_len(self.k, self.topic_word_posterior.len())?;
        let positive = |rows: &[Vec<f64>]| rows.iter().flatten().all(|&x| x > 0.0 && x.is_finite());
        if !positive(&self.topic_word_posterior) || !positive(&self.doc_topic_posterior) {
            return Err(Error::invalid("Dirichlet parameters must be positive"));
        }
        Ok(LdaVariationalState {
            topic_word_posterior: self.topic_word_posterior,
            doc_topic_posterior: self.doc_topic_posterior,
            token_resp: self.token_resp.unwrap_or_default(),
            elbo_trace: self.elbo_trace,
            iterations: self.iterations,
            converged: self.converged,
            floor_hits: self.floor_hits,
        })
    }
}
