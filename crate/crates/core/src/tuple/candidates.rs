use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::dataset::{AnswerOption, Question};
use crate::text::{content_tokens, is_stopword, stem};

use super::extract::{Field, Tuple};

pub const EXACT_MATCH: f64 = 1.0;
pub const STEM_MATCH: f64 = 0.7;
pub const DEFAULT_THETA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Question,
    Option,
}

/// A question or option term, by position in its side's term list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TermRef {
    pub side: Side,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentEdge {
    pub term: TermRef,
    pub field: Field,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportCandidate {
    pub tuple: Tuple,
    pub edges: Vec<AlignmentEdge>,
}

impl SupportCandidate {
    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }
}

/// Lexical similarity between two lowercased tokens: 1.0 for the same token,
/// 0.7 for the same stem, 0 otherwise or when either is a stopword.
pub fn similarity(a: &str, b: &str) -> f64 {
    if is_stopword(a) || is_stopword(b) {
        0.0
    } else if a == b {
        EXACT_MATCH
    } else if stem(a) == stem(b) {
        STEM_MATCH
    } else {
        0.0
    }
}

/// Distinct content tokens in first-occurrence order.
pub fn terms_of(text: &str) -> Vec<String> {
    let mut seen = BTreeSet::new();
    content_tokens(text).into_iter().filter(|t| seen.insert(t.clone())).collect()
}

/// Tuples with a stem-keyed lookup so candidate retrieval does not scan the
/// whole store.
#[derive(Debug, Clone, Default)]
pub struct TupleStore {
    tuples: Vec<Tuple>,
    by_stem: HashMap<String, Vec<u32>>,
    /// Per tuple, per field (in `Tuple::fields` order): each token's stem,
    /// or `None` for a stopword.
    stems: Vec<Vec<Vec<Option<String>>>>,
}

impl TupleStore {
    pub fn new(tuples: Vec<Tuple>) -> Self {
        let mut by_stem: HashMap<String, Vec<u32>> = HashMap::new();
        let mut stems = Vec::with_capacity(tuples.len());
        for (i, t) in tuples.iter().enumerate() {
            let fields: Vec<Vec<Option<String>>> = t
                .fields()
                .map(|(_, toks)| toks.iter().map(|tok| (!is_stopword(tok)).then(|| stem(tok))).collect())
                .collect();
            let distinct: BTreeSet<&String> = fields.iter().flatten().flatten().collect();
            for s in distinct {
                by_stem.entry(s.clone()).or_default().push(i as u32);
            }
            stems.push(fields);
        }
        Self { tuples, by_stem, stems }
    }

    pub fn tuples(&self) -> &[Tuple] {
        &self.tuples
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    fn touching<'a>(&self, stems: impl Iterator<Item = &'a String>) -> BTreeSet<u32> {
        stems.filter_map(|s| self.by_stem.get(s)).flatten().copied().collect()
    }

    /// Edges from `terms` (content tokens with their stems) into tuple `i`;
    /// the same weights as [`similarity`], without re-stemming.
    fn align(&self, i: usize, side: Side, terms: &[(String, String)], theta: f64, out: &mut Vec<AlignmentEdge>) {
        let tuple = &self.tuples[i];
        for (index, (term, term_stem)) in terms.iter().enumerate() {
            for ((field, toks), stems) in tuple.fields().zip(&self.stems[i]) {
                let weight = toks
                    .iter()
                    .zip(stems)
                    .map(|(tok, st)| match st {
                        None => 0.0,
                        Some(_) if tok == term => EXACT_MATCH,
                        Some(st) if st == term_stem => STEM_MATCH,
                        Some(_) => 0.0,
                    })
                    .fold(0.0, f64::max);
                if weight > 0.0 && weight >= theta {
                    out.push(AlignmentEdge { term: TermRef { side, index }, field, weight });
                }
            }
        }
    }
}

fn with_stems(terms: Vec<String>) -> Vec<(String, String)> {
    terms
        .into_iter()
        .map(|t| {
            let s = stem(&t);
            (t, s)
        })
        .collect()
}

/// The `k` tuples best aligned with the stem and `option`, each with every
/// edge of weight at least `theta`. Tuples with no edge are dropped.
pub fn build_candidates(
    q: &Question,
    option: &AnswerOption,
    store: &TupleStore,
    k: usize,
    theta: f64,
) -> Vec<SupportCandidate> {
    if k == 0 {
        return Vec::new();
    }
    let q_terms = with_stems(terms_of(&q.stem));
    let o_terms = with_stems(terms_of(&option.text));
    let mut cands: Vec<(usize, Vec<AlignmentEdge>)> = store
        .touching(q_terms.iter().chain(&o_terms).map(|(_, s)| s))
        .into_iter()
        .filter_map(|i| {
            let i = i as usize;
            let mut edges = Vec::new();
            store.align(i, Side::Question, &q_terms, theta, &mut edges);
            store.align(i, Side::Option, &o_terms, theta, &mut edges);
            (!edges.is_empty()).then_some((i, edges))
        })
        .collect();
    let total = |edges: &[AlignmentEdge]| edges.iter().map(|e| e.weight).sum::<f64>();
    cands.sort_by(|a, b| total(&b.1).total_cmp(&total(&a.1)).then(a.0.cmp(&b.0)));
    cands.truncate(k);
    cands.into_iter().map(|(i, edges)| SupportCandidate { tuple: store.tuples[i].clone(), edges }).collect()
}
