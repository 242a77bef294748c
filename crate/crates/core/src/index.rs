//! Sentence-level inverted index with BM25 ranking.
//!
//! Snapshots are JSON documents of the form
//! `{"format":"sciqa-index","version":1,"params":{..},"sentences":[{"sid":0,"text":".."}]}`.
//! Postings and lengths are rebuilt from the sentence texts on load, which is
//! deterministic, so a load of a saved index compares equal to the original.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{is_stopword, tokenize};

pub const SNAPSHOT_FORMAT: &str = "sciqa-index";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if !(self.k1.is_finite() && self.k1 > 0.0) {
            return Err(Error::InvalidArgument(format!("k1 must be positive, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::InvalidArgument(format!("b must lie in [0, 1], got {}", self.b)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub sid: u32,
    pub text: String,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub sid: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalHit {
    pub sid: u32,
    pub score: f64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentenceIndex {
    sentences: Vec<Sentence>,
    postings: HashMap<String, Vec<Posting>>,
    avg_len: f64,
    params: Bm25Params,
}

impl SentenceIndex {
    /// Index every non-blank line; sids are assigned densely in input order.
    pub fn build<I, S>(corpus: I, params: Bm25Params) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut sentences = Vec::new();
        for line in corpus {
            let text = line.as_ref().trim();
            if text.is_empty() {
                continue;
            }
            let sid = sentences.len() as u32;
            sentences.push(Sentence { sid, text: text.to_string(), tokens: tokenize(text) });
        }
        Self::from_sentences(sentences, params)
    }

    fn from_sentences(sentences: Vec<Sentence>, params: Bm25Params) -> Self {
        let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
        let mut total = 0usize;
        for s in &sentences {
            total += s.tokens.len();
            let mut tf: BTreeMap<&str, u32> = BTreeMap::new();
            for t in &s.tokens {
                *tf.entry(t.as_str()).or_default() += 1;
            }
            for (tok, n) in tf {
                postings.entry(tok.to_string()).or_default().push(Posting { sid: s.sid, tf: n });
            }
        }
        let avg_len = if sentences.is_empty() { 0.0 } else { total as f64 / sentences.len() as f64 };
        Self { sentences, postings, avg_len, params }
    }

    pub fn from_file(path: impl AsRef<Path>, params: Bm25Params) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(Self::build(text.lines(), params))
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn params(&self) -> Bm25Params {
        self.params
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    pub fn sentence(&self, sid: u32) -> Option<&Sentence> {
        self.sentences.get(sid as usize)
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn doc_len(&self, sid: u32) -> usize {
        self.sentences[sid as usize].tokens.len()
    }

    pub fn postings(&self, token: &str) -> &[Posting] {
        self.postings.get(token).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    /// IDF with the `+1` inside the logarithm, so it is always positive.
    pub fn idf(&self, df: usize) -> f64 {
        let n = self.sentences.len() as f64;
        let df = df as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    /// Query tokens after stopword removal, deduplicated in order.
    pub fn query_terms(query: &str) -> Vec<String> {
        let mut seen = HashSet::new();
        tokenize(query).into_iter().filter(|t| !is_stopword(t) && seen.insert(t.clone())).collect()
    }

    /// Top-`k` sentences by BM25, best first, ties by ascending sid.
    /// Sentences that match no query term are never returned.
    pub fn retrieve(&self, query: &str, k: usize) -> Result<Vec<RetrievalHit>> {
        if k == 0 {
            return Err(Error::InvalidArgument("retrieve needs k >= 1".into()));
        }
        let Bm25Params { k1, b } = self.params;
        let mut scores: HashMap<u32, f64> = HashMap::new();
        for term in Self::query_terms(query) {
            let plist = self.postings(&term);
            if plist.is_empty() {
                continue;
            }
            let idf = self.idf(plist.len());
            for p in plist {
                let dl = self.doc_len(p.sid) as f64;
                let tf = p.tf as f64;
                let norm = tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / self.avg_len));
                *scores.entry(p.sid).or_default() += idf * norm;
            }
        }
        let mut ranked: Vec<(u32, f64)> = scores.into_iter().filter(|(_, s)| *s > 0.0).collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(k);
        Ok(ranked
            .into_iter()
            .map(|(sid, score)| RetrievalHit { sid, score, text: self.sentences[sid as usize].text.clone() })
            .collect())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let snap = Snapshot {
            format: SNAPSHOT_FORMAT.to_string(),
            version: SNAPSHOT_VERSION,
            params: self.params,
            sentences: self.sentences.iter().map(|s| SnapshotSentence { sid: s.sid, text: s.text.clone() }).collect(),
        };
        fs::write(path, serde_json::to_vec(&snap)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bad = |message: String| Error::Snapshot { path: path.to_path_buf(), message };
        let snap: Snapshot = serde_json::from_slice(&fs::read(path)?)?;
        if snap.format != SNAPSHOT_FORMAT {
            return Err(bad(format!("not an index snapshot (format `{}`)", snap.format)));
        }
        if snap.version != SNAPSHOT_VERSION {
            return Err(bad(format!("unsupported version {}", snap.version)));
        }
        snap.params.validate()?;
        let mut sentences = Vec::with_capacity(snap.sentences.len());
        for (i, s) in snap.sentences.into_iter().enumerate() {
            if s.sid as usize != i {
                return Err(bad(format!("sid {} out of sequence at position {i}", s.sid)));
            }
            let tokens = tokenize(&s.text);
            sentences.push(Sentence { sid: s.sid, text: s.text, tokens });
        }
        Ok(Self::from_sentences(sentences, snap.params))
    }
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    format: String,
    version: u32,
    params: Bm25Params,
    sentences: Vec<SnapshotSentence>,
}

#[derive(Serialize, Deserialize)]
struct SnapshotSentence {
    sid: u32,
    text: String,
}
