//! Term-pivot lexical cohesion.
//!
//! Every content word gets a vector over a fixed bank of scientific terms.
//! Entry `t` of word `w` is `co * ln(1 + co * W / (n_w * n_t))`, where `co` is
//! the number of windows holding both, `n_w`, `n_t` their window counts and
//! `W` the window total: a co-occurrence count weighted by a softplus of its
//! PMI, so any observed co-occurrence gives a positive entry. Vectors are then
//! scaled to unit length. A question and an option are compared by the cosine
//! of the mean vectors of their content words.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::dataset::Question;
use crate::error::{Error, Result};
use crate::text::{content_tokens, tokenize};

use super::pmi::windows;
use super::prediction::{Solver, SolverPrediction};

type SparseVec = Vec<(u32, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct TermAssociations {
    terms: Vec<String>,
    assoc: HashMap<String, SparseVec>,
}

/// Read a term bank: one term per line, blank lines ignored, duplicates dropped.
pub fn load_term_bank(path: impl AsRef<Path>) -> Result<Vec<String>> {
    Ok(parse_term_bank(&fs::read_to_string(path)?))
}

pub fn parse_term_bank(text: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    text.lines().map(|l| tokenize(l).join(" ")).filter(|t| !t.is_empty() && seen.insert(t.clone())).collect()
}

impl TermAssociations {
    pub fn build<I, S>(corpus: I, term_bank: &[String], window_size: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if term_bank.is_empty() {
            return Err(Error::InvalidArgument("term bank is empty".into()));
        }
        if window_size < 2 {
            return Err(Error::InvalidArgument(format!("window size must be >= 2, got {window_size}")));
        }
        let terms: Vec<String> = term_bank.iter().map(|t| tokenize(t).join(" ")).collect();
        let term_ids: HashMap<&str, u32> = terms.iter().enumerate().map(|(i, t)| (t.as_str(), i as u32)).collect();
        let max_term_len = terms.iter().map(|t| t.split(' ').count()).max().unwrap_or(1);

        let mut windows_total = 0u64;
        let mut word_count: HashMap<String, u64> = HashMap::new();
        let mut term_count = vec![0u64; terms.len()];
        let mut co: HashMap<String, HashMap<u32, u64>> = HashMap::new();

        for line in corpus {
            let tokens = tokenize(line.as_ref());
            for window in windows(&tokens, window_size) {
                windows_total += 1;
                let mut present = BTreeSet::new();
                for start in 0..window.len() {
                    for len in 1..=max_term_len.min(window.len() - start) {
                        let cand = window[start..start + len].join(" ");
                        if let Some(&id) = term_ids.get(cand.as_str()) {
                            present.insert(id);
                        }
                    }
                }
                for &t in &present {
                    term_count[t as usize] += 1;
                }
                let words: BTreeSet<&String> = window.iter().filter(|w| !crate::text::is_stopword(w)).collect();
                for w in words {
                    *word_count.entry(w.clone()).or_default() += 1;
                    if present.is_empty() {
                        continue;
                    }
                    let row = co.entry(w.clone()).or_default();
                    for &t in &present {
                        *row.entry(t).or_default() += 1;
                    }
                }
            }
        }

        let w_total = windows_total as f64;
        let mut assoc = HashMap::with_capacity(co.len());
        for (word, row) in co {
            let nw = word_count[&word] as f64;
            let mut v: SparseVec = row
                .into_iter()
                .map(|(t, c)| {
                    let c = c as f64;
                    let nt = term_count[t as usize] as f64;
                    (t, c * (1.0 + c * w_total / (nw * nt)).ln())
                })
                .collect();
            v.sort_unstable_by_key(|(t, _)| *t);
            let norm = v.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|(_, x)| *x /= norm);
                assoc.insert(word, v);
            }
        }
        Ok(Self { terms, assoc })
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    /// Dense unit vector for `word`, or all zeros when it never shares a
    /// window with a bank term.
    pub fn vector(&self, word: &str) -> Vec<f64> {
        let mut dense = vec![0.0; self.terms.len()];
        if let Some(v) = self.assoc.get(word) {
            for &(t, x) in v {
                dense[t as usize] = x;
            }
        }
        dense
    }

    /// Mean vector over the content words of `text`.
    pub fn text_vector(&self, text: &str) -> Vec<f64> {
        let words = content_tokens(text);
        let mut acc = vec![0.0; self.terms.len()];
        if words.is_empty() {
            return acc;
        }
        for w in &words {
            if let Some(v) = self.assoc.get(w) {
                for &(t, x) in v {
                    acc[t as usize] += x;
                }
            }
        }
        let n = words.len() as f64;
        acc.iter_mut().for_each(|x| *x /= n);
        acc
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

pub struct AcmeSolver {
    assoc: Arc<TermAssociations>,
}

impl AcmeSolver {
    pub fn new(assoc: Arc<TermAssociations>) -> Self {
        Self { assoc }
    }
}

impl Solver for AcmeSolver {
    fn name(&self) -> &str {
        "acme"
    }

    fn solve(&self, q: &Question) -> SolverPrediction {
        let stem = self.assoc.text_vector(&q.stem);
        let confidences = q.options.iter().map(|o| cosine(&stem, &self.assoc.text_vector(&o.text))).collect();
        SolverPrediction::new(self.name(), q, confidences)
    }
}
