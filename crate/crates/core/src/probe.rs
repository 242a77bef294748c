//! Synthetic skill probes: negation, conjunction and counting.
//!
//! Context sentences are written into the stem ahead of the question, e.g.
//! `"Alan is small. Alan is tall. … Which of the following is not tall?"`.
//! [`probe_oracle`] re-derives every key from the stem text alone, reading
//! attributes under a closed world: "not X" holds of an entity exactly when
//! "Entity is X." is absent from the context.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{letter_label, AnswerOption, Dataset, Partition, Question, Source};
use crate::error::{Error, Result};

pub const COUNT_WORDS: &[&str] =
    &["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"];

const PICK_VERBS: &[&str] = &["picked up", "got", "grabbed", "took"];
const DROP_VERBS: &[&str] = &["dropped", "put down", "discarded"];
const PROBE_ARITY: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    Negation,
    Conjunction,
    Counting,
}

impl ProbeKind {
    pub const ALL: [ProbeKind; 3] = [ProbeKind::Negation, ProbeKind::Conjunction, ProbeKind::Counting];
}

impl fmt::Display for ProbeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProbeKind::Negation => "negation",
            ProbeKind::Conjunction => "conjunction",
            ProbeKind::Counting => "counting",
        })
    }
}

impl FromStr for ProbeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "negation" => Ok(ProbeKind::Negation),
            "conjunction" => Ok(ProbeKind::Conjunction),
            "counting" => Ok(ProbeKind::Counting),
            other => Err(Error::InvalidArgument(format!("unknown probe kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub kind: ProbeKind,
    pub n: usize,
    pub entities: Vec<String>,
    /// Antonym pairs; no word may appear twice.
    pub attributes: Vec<(String, String)>,
    /// Conjuncts per conjunction query, counting a negated one.
    pub k_conjuncts: usize,
    /// Make the last conjunct negated.
    pub with_negation: bool,
    /// Longest counting story.
    pub max_steps: usize,
    pub objects: Vec<String>,
    pub seed: u64,
}

fn owned(words: &[&str]) -> Vec<String> {
    words.iter().map(|s| s.to_string()).collect()
}

impl ProbeSpec {
    pub fn new(kind: ProbeKind, n: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            entities: owned(&[
                "Alan", "Bob", "Charlie", "David", "Emily", "Fiona", "George", "Hannah", "Irene", "Jack", "Karen",
                "Liam",
            ]),
            attributes: [
                ("tall", "short"),
                ("big", "small"),
                ("red", "blue"),
                ("light", "heavy"),
                ("old", "young"),
                ("fast", "slow"),
                ("hot", "cold"),
                ("wet", "dry"),
            ]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect(),
            k_conjuncts: 2,
            with_negation: false,
            max_steps: 6,
            objects: owned(&["football", "milk", "apple", "book", "pencil", "kite", "hat", "cup", "key", "ball"]),
            seed,
        }
    }

    pub fn conjuncts(mut self, k: usize, with_negation: bool) -> Self {
        self.k_conjuncts = k;
        self.with_negation = with_negation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        let mut words = BTreeSet::new();
        for (a, b) in &self.attributes {
            for w in [a, b] {
                if w.is_empty() || !words.insert(w.as_str()) {
                    return bad(format!("attribute `{w}` repeats or is empty"));
                }
            }
        }
        let distinct: BTreeSet<&String> = self.entities.iter().collect();
        match self.kind {
            ProbeKind::Negation => {
                if distinct.len() < PROBE_ARITY {
                    return bad(format!("negation needs >= {PROBE_ARITY} entities"));
                }
                if self.attributes.len() < 2 {
                    return bad("negation needs >= 2 antonym pairs".into());
                }
            }
            ProbeKind::Conjunction => {
                if !(1..=5).contains(&self.k_conjuncts) {
                    return bad(format!("k_conjuncts must be 1..=5, got {}", self.k_conjuncts));
                }
                if distinct.len() < PROBE_ARITY {
                    return bad(format!("conjunction needs >= {PROBE_ARITY} entities"));
                }
                if self.attributes.len() < self.k_conjuncts {
                    return bad(format!("{} conjuncts need as many antonym pairs", self.k_conjuncts));
                }
            }
            ProbeKind::Counting => {
                if self.max_steps == 0 {
                    return bad("max_steps must be >= 1".into());
                }
                if distinct.is_empty() || self.objects.is_empty() {
                    return bad("counting needs an entity and objects".into());
                }
                if self.max_steps.min(self.objects.len()) + PROBE_ARITY > COUNT_WORDS.len() {
                    return bad("stories too long for the count vocabulary".into());
                }
            }
        }
        Ok(())
    }
}

fn question(spec: &ProbeSpec, i: usize, stem: String, options: Vec<String>, key: usize) -> Question {
    Question {
        id: format!("{}-{}-{i:05}", spec.kind, spec.seed),
        stem,
        options: options.into_iter().enumerate().map(|(j, t)| AnswerOption::new(letter_label(j), t)).collect(),
        answer_key: letter_label(key).to_string(),
        source: Some(Source { exam: format!("probe-{}", spec.kind), grade: None, year: None }),
        partition: Partition::Test,
        augmented: false,
        pair_id: None,
    }
}

/// One value from each chosen pair per entity, listed entity by entity.
fn facts(entities: &[String], values: &[Vec<&str>]) -> String {
    let mut out = Vec::new();
    for (e, vs) in entities.iter().zip(values) {
        for v in vs {
            out.push(format!("{e} is {v}."));
        }
    }
    out.join(" ")
}

/// A question whose options are four entities, exactly one of which meets
/// every condition `(pair index, wanted value, negated)`.
fn attribute_question(
    spec: &ProbeSpec,
    i: usize,
    rng: &mut ChaCha8Rng,
    pairs: &[usize],
    conds: &[(usize, &str, bool)],
    query: String,
) -> Question {
    let entities: Vec<String> = spec.entities.choose_multiple(rng, PROBE_ARITY).cloned().collect();
    let key = rng.gen_range(0..PROBE_ARITY);
    let side = |p: usize, second: bool| {
        let (a, b) = &spec.attributes[p];
        if second {
            b.as_str()
        } else {
            a.as_str()
        }
    };
    // The value of pair `p` that meets (or, when `negated`, breaks) `want`.
    let satisfying = |p: usize, want: &str, negated: bool| -> &str {
        let (a, b) = &spec.attributes[p];
        let is_a = want == a.as_str();
        if is_a != negated {
            a.as_str()
        } else {
            b.as_str()
        }
    };
    let values: Vec<Vec<&str>> = (0..PROBE_ARITY)
        .map(|e| {
            let mut vs: Vec<&str> = pairs.iter().map(|&p| side(p, rng.gen_bool(0.5))).collect();
            for &(p, want, negated) in conds {
                let slot = pairs.iter().position(|&q| q == p).expect("condition pair is active");
                vs[slot] = satisfying(p, want, negated);
            }
            if e != key {
                // Break at least one condition.
                let (p, want, negated) = conds[rng.gen_range(0..conds.len())];
                let slot = pairs.iter().position(|&q| q == p).expect("condition pair is active");
                vs[slot] = satisfying(p, want, !negated);
                for &(p2, want2, neg2) in conds {
                    if p2 != p && rng.gen_bool(0.5) {
                        let slot = pairs.iter().position(|&q| q == p2).expect("active");
                        vs[slot] = satisfying(p2, want2, !neg2);
                    }
                }
            }
            vs
        })
        .collect();
    let stem = format!("{} {query}", facts(&entities, &values));
    question(spec, i, stem, entities, key)
}

fn gen_one_negation(spec: &ProbeSpec, i: usize, rng: &mut ChaCha8Rng) -> Question {
    let mut pairs: Vec<usize> = (0..spec.attributes.len()).collect();
    pairs.shuffle(rng);
    pairs.truncate(2);
    let target = pairs[rng.gen_range(0..2)];
    let (a, b) = &spec.attributes[target];
    let x = if rng.gen_bool(0.5) { a.as_str() } else { b.as_str() };
    attribute_question(spec, i, rng, &pairs, &[(target, x, true)], format!("Which of the following is not {x}?"))
}

fn gen_one_conjunction(spec: &ProbeSpec, i: usize, rng: &mut ChaCha8Rng) -> Question {
    let k = spec.k_conjuncts;
    let mut pairs: Vec<usize> = (0..spec.attributes.len()).collect();
    pairs.shuffle(rng);
    pairs.truncate(k.max(2).min(spec.attributes.len()));
    let conds: Vec<(usize, &str, bool)> = pairs[..k]
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let (a, b) = &spec.attributes[p];
            let v = if rng.gen_bool(0.5) { a.as_str() } else { b.as_str() };
            (p, v, spec.with_negation && j + 1 == k)
        })
        .collect();
    let words: Vec<String> =
        conds.iter().map(|(_, v, neg)| if *neg { format!("not {v}") } else { v.to_string() }).collect();
    let query = format!("Which of the following is {}?", words.join(" and "));
    attribute_question(spec, i, rng, &pairs, &conds, query)
}

fn gen_one_counting(spec: &ProbeSpec, i: usize, rng: &mut ChaCha8Rng) -> Question {
    let name = spec.entities.choose(rng).expect("validated").clone();
    let steps = rng.gen_range(0..=spec.max_steps);
    let mut held: Vec<&String> = Vec::new();
    let mut sentences = Vec::new();
    for _ in 0..steps {
        let free: Vec<&String> = spec.objects.iter().filter(|o| !held.contains(o)).collect();
        let drop = !held.is_empty() && (free.is_empty() || rng.gen_bool(0.4));
        if drop {
            let obj = held.remove(rng.gen_range(0..held.len()));
            sentences.push(format!("{name} {} the {obj}.", DROP_VERBS.choose(rng).expect("non-empty")));
        } else {
            let obj = free[rng.gen_range(0..free.len())];
            held.push(obj);
            sentences.push(format!("{name} {} the {obj}.", PICK_VERBS.choose(rng).expect("non-empty")));
        }
    }
    let truth = held.len();
    let key = rng.gen_range(0..PROBE_ARITY);
    let ceiling = spec.max_steps.min(spec.objects.len()) + PROBE_ARITY - 1;
    let mut distractors: Vec<usize> = (0..=ceiling).filter(|&c| c != truth).collect::<Vec<_>>();
    distractors.shuffle(rng);
    distractors.truncate(PROBE_ARITY - 1);
    distractors.sort_unstable();
    distractors.insert(key, truth);
    let options = distractors.iter().map(|&c| COUNT_WORDS[c].to_string()).collect();
    sentences.push(format!("How many objects is {name} holding?"));
    question(spec, i, sentences.join(" "), options, key)
}

/// Question `i` draws from its own stream of the seeded generator, so the
/// output does not depend on how generation is parallelized.
pub fn generate(spec: &ProbeSpec) -> Result<Dataset> {
    spec.validate()?;
    let questions: Vec<Question> = (0..spec.n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64);
            match spec.kind {
                ProbeKind::Negation => gen_one_negation(spec, i, &mut rng),
                ProbeKind::Conjunction => gen_one_conjunction(spec, i, &mut rng),
                ProbeKind::Counting => gen_one_counting(spec, i, &mut rng),
            }
        })
        .collect();
    Dataset::new(format!("probe-{}-{}", spec.kind, spec.seed), questions)
}

pub fn gen_negation(spec: &ProbeSpec) -> Result<Dataset> {
    generate(&ProbeSpec { kind: ProbeKind::Negation, ..spec.clone() })
}

pub fn gen_conjunction(spec: &ProbeSpec) -> Result<Dataset> {
    generate(&ProbeSpec { kind: ProbeKind::Conjunction, ..spec.clone() })
}

pub fn gen_counting(spec: &ProbeSpec) -> Result<Dataset> {
    generate(&ProbeSpec { kind: ProbeKind::Counting, ..spec.clone() })
}

fn split_sentences(stem: &str) -> (Vec<&str>, Option<&str>) {
    let mut facts = Vec::new();
    let mut query = None;
    let mut start = 0;
    for (i, c) in stem.char_indices() {
        if c == '.' || c == '?' {
            let s = stem[start..i].trim();
            if !s.is_empty() {
                if c == '?' {
                    query = Some(s);
                } else {
                    facts.push(s);
                }
            }
            start = i + 1;
        }
    }
    (facts, query)
}

fn unparseable(what: impl fmt::Display) -> Error {
    Error::Unparseable(what.to_string())
}

fn only_match(q: &Question, hits: Vec<usize>) -> Result<String> {
    match hits.as_slice() {
        [i] => Ok(q.options[*i].label.clone()),
        [] => Err(unparseable(format!("{}: no option satisfies the query", q.id))),
        _ => Err(unparseable(format!("{}: {} options satisfy the query", q.id, hits.len()))),
    }
}

fn attribute_oracle(q: &Question, facts: &[&str], query: &str) -> Result<String> {
    let mut known: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    for f in facts {
        let (e, v) = f.split_once(" is ").ok_or_else(|| unparseable(format!("fact `{f}`")))?;
        known.entry(e.trim()).or_default().insert(v.trim());
    }
    let body =
        query.strip_prefix("Which of the following is ").ok_or_else(|| unparseable(format!("query `{query}`")))?;
    let conds: Vec<(bool, &str)> = body
        .split(" and ")
        .map(|c| match c.trim().strip_prefix("not ") {
            Some(v) => (true, v.trim()),
            None => (false, c.trim()),
        })
        .collect();
    let empty = BTreeSet::new();
    let hits = q
        .options
        .iter()
        .enumerate()
        .filter(|(_, o)| {
            let attrs = known.get(o.text.trim()).unwrap_or(&empty);
            conds.iter().all(|&(neg, v)| attrs.contains(v) != neg)
        })
        .map(|(i, _)| i)
        .collect();
    only_match(q, hits)
}

fn counting_oracle(q: &Question, facts: &[&str], query: &str) -> Result<String> {
    let name = query
        .strip_prefix("How many objects is ")
        .and_then(|r| r.strip_suffix(" holding"))
        .ok_or_else(|| unparseable(format!("query `{query}`")))?;
    let mut held: BTreeSet<&str> = BTreeSet::new();
    for f in facts {
        let rest = f
            .strip_prefix(name)
            .map(str::trim_start)
            .ok_or_else(|| unparseable(format!("event `{f}` is not about {name}")))?;
        let (verb, obj) = rest.split_once(" the ").ok_or_else(|| unparseable(format!("event `{f}`")))?;
        if PICK_VERBS.contains(&verb) {
            held.insert(obj);
        } else if DROP_VERBS.contains(&verb) {
            if !held.remove(obj) {
                return Err(unparseable(format!("{name} drops {obj} without holding it")));
            }
        } else {
            return Err(unparseable(format!("verb `{verb}`")));
        }
    }
    let word = COUNT_WORDS.get(held.len()).ok_or_else(|| unparseable("count beyond vocabulary"))?;
    let hits = q.options.iter().enumerate().filter(|(_, o)| o.text.trim() == *word).map(|(i, _)| i).collect();
    only_match(q, hits)
}

/// Derive the key of a probe question from its stem.
pub fn probe_oracle(q: &Question, kind: ProbeKind) -> Result<String> {
    let (facts, query) = split_sentences(&q.stem);
    let query = query.ok_or_else(|| unparseable(format!("{}: no question sentence", q.id)))?;
    match kind {
        ProbeKind::Negation | ProbeKind::Conjunction => attribute_oracle(q, &facts, query),
        ProbeKind::Counting => counting_oracle(q, &facts, query),
    }
}
