// Independent reference implementations used by the acceptance and property
// tests. Nothing here calls into the library's algorithms.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sciqa::dataset::letter_label;
use sciqa::tuple::{AlignmentEdge, Field, Side, SupportCandidate, TermRef, Tuple};
use sciqa::{AnswerOption, Partition, Question};

pub fn question(id: &str, stem: &str, options: &[&str], key: &str) -> Question {
    Question {
        id: id.into(),
        stem: stem.into(),
        options: options.iter().enumerate().map(|(i, t)| AnswerOption::new(letter_label(i), *t)).collect(),
        answer_key: key.into(),
        source: None,
        partition: Partition::Test,
        augmented: false,
        pair_id: None,
    }
}

// ---------------------------------------------------------------- PMI

fn words(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in line.chars() {
        if c.is_alphanumeric() {
            cur.extend(c.to_lowercase());
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Every window of every line, stride 1; a short line is one window.
pub fn all_windows(corpus: &[String], size: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for line in corpus {
        let t = words(line);
        if t.is_empty() {
            continue;
        }
        if t.len() <= size {
            out.push(t);
        } else {
            for start in 0..=t.len() - size {
                out.push(t[start..start + size].to_vec());
            }
        }
    }
    out
}

/// Does `gram` (1-3 words, or `a _ c`) occur in the window?
pub fn window_has(window: &[String], gram: &str) -> bool {
    let g: Vec<&str> = gram.split(' ').collect();
    if g.len() == 3 && g[1] == "_" {
        return window.windows(3).any(|w| w[0] == g[0] && w[2] == g[2]);
    }
    window.windows(g.len()).any(|w| w.iter().zip(&g).all(|(a, b)| a == b))
}

/// Unsmoothed PMI by counting windows directly.
pub fn pmi_by_counting(windows: &[Vec<String>], x: &str, y: &str) -> f64 {
    let n = windows.len() as f64;
    let cx = windows.iter().filter(|w| window_has(w, x)).count() as f64;
    let cy = windows.iter().filter(|w| window_has(w, y)).count() as f64;
    let cxy = windows.iter().filter(|w| window_has(w, x) && window_has(w, y)).count() as f64;
    (cxy * n / (cx * cy)).ln()
}

/// A gram that occurs in `window`, of a random shape.
pub fn sample_gram(rng: &mut ChaCha8Rng, window: &[String]) -> String {
    let i = rng.gen_range(0..window.len());
    let room = window.len() - i;
    match rng.gen_range(0..4) {
        1 if room >= 2 => format!("{} {}", window[i], window[i + 1]),
        2 if room >= 3 => format!("{} {} {}", window[i], window[i + 1], window[i + 2]),
        3 if room >= 3 => format!("{} _ {}", window[i], window[i + 2]),
        _ => window[i].clone(),
    }
}

/// A corpus over a small vocabulary with at most `max_windows` windows.
pub fn random_corpus(seed: u64, size: usize, max_windows: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab: Vec<String> = (0..rng.gen_range(4..14)).map(|i| format!("w{i}")).collect();
    let mut corpus = Vec::new();
    let mut windows = 0;
    loop {
        let len = rng.gen_range(0..3 * size);
        let n = if len == 0 {
            0
        } else if len <= size {
            1
        } else {
            len - size + 1
        };
        if windows + n > max_windows {
            break;
        }
        windows += n;
        let line: Vec<&str> = (0..len).map(|_| vocab[rng.gen_range(0..vocab.len())].as_str()).collect();
        // Punctuation between some words exercises the tokenizer.
        corpus.push(line.join(if rng.gen_bool(0.2) { ", " } else { " " }));
    }
    corpus
}

// ------------------------------------------------------ support graphs

pub struct GraphInstance {
    pub cands: Vec<SupportCandidate>,
    pub max_tuples: usize,
    pub penalty: f64,
}

/// Random candidates over a few question and option terms. With `dyadic`
/// every weight and the penalty are exact binary fractions, so sums are
/// exact whatever the order.
pub fn random_graph_instance(seed: u64, max_cands: usize, dyadic: bool) -> GraphInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: &[f64] = if dyadic { &[0.5, 0.75, 1.0] } else { &[0.5, 0.7, 1.0] };
    let nq = rng.gen_range(1..=4);
    let no = rng.gen_range(1..=3);
    let n = rng.gen_range(1..=max_cands);
    let cands = (0..n)
        .map(|c| {
            let edges = (0..rng.gen_range(1..=4))
                .map(|_| {
                    let term = if rng.gen_bool(0.6) {
                        TermRef { side: Side::Question, index: rng.gen_range(0..nq) }
                    } else {
                        TermRef { side: Side::Option, index: rng.gen_range(0..no) }
                    };
                    let field = match rng.gen_range(0..3) {
                        0 => Field::Subject,
                        1 => Field::Predicate,
                        _ => Field::Object(0),
                    };
                    AlignmentEdge { term, field, weight: weights[rng.gen_range(0..weights.len())] }
                })
                .collect();
            SupportCandidate { tuple: Tuple::new("s", "p", &["o"], c as u32), edges }
        })
        .collect();
    let penalty = if dyadic { 0.125 } else { 0.1 };
    GraphInstance { cands, max_tuples: rng.gen_range(1..=3), penalty }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Best objective by trying every tuple subset and, within it, every way of
/// giving each term at most one edge.
pub fn brute_force_objective(inst: &GraphInstance) -> f64 {
    let mut best = 0.0f64;
    for k in 1..=inst.max_tuples.min(inst.cands.len()) {
        for subset in subsets(inst.cands.len(), k) {
            // term -> every (position in subset, weight) edge it could use
            let mut by_term: BTreeMap<TermRef, Vec<(usize, f64)>> = BTreeMap::new();
            for (pos, &c) in subset.iter().enumerate() {
                for e in &inst.cands[c].edges {
                    by_term.entry(e.term).or_default().push((pos, e.weight));
                }
            }
            let terms: Vec<(TermRef, Vec<(usize, f64)>)> = by_term.into_iter().collect();
            let mut q_hits = vec![0usize; k];
            let mut value = enumerate(&terms, 0, &mut q_hits, false, 0.0);
            value -= inst.penalty * k as f64;
            if value > best {
                best = value;
            }
        }
    }
    best
}

fn enumerate(
    terms: &[(TermRef, Vec<(usize, f64)>)],
    i: usize,
    q_hits: &mut Vec<usize>,
    option_hit: bool,
    sum: f64,
) -> f64 {
    if i == terms.len() {
        return if option_hit && q_hits.iter().all(|&h| h > 0) { sum } else { f64::NEG_INFINITY };
    }
    let (term, edges) = &terms[i];
    let mut best = enumerate(terms, i + 1, q_hits, option_hit, sum);
    for &(pos, w) in edges {
        let v = match term.side {
            Side::Question => {
                q_hits[pos] += 1;
                let v = enumerate(terms, i + 1, q_hits, option_hit, sum + w);
                q_hits[pos] -= 1;
                v
            }
            Side::Option => enumerate(terms, i + 1, q_hits, true, sum + w),
        };
        best = best.max(v);
    }
    best
}

// --------------------------------------------------------- probe logic

/// Options meeting every condition of a "Which of the following is a and
/// not b?" query, reading the "X is v." facts closed-world: a value holds
/// exactly when it is stated.
pub fn conjunction_answer(stem: &str, options: &[&str]) -> Vec<usize> {
    let (context, query) = stem.rsplit_once(". Which").expect("query sentence");
    let mut facts: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for s in context.split('.') {
        let s = s.trim();
        if let Some((who, what)) = s.split_once(" is ") {
            facts.entry(who).or_default().push(what);
        }
    }
    let query = query.trim_start_matches(" of the following is ").trim_end_matches('?');
    let conds: Vec<(bool, &str)> = query
        .split(" and ")
        .map(|c| match c.strip_prefix("not ") {
            Some(v) => (false, v),
            None => (true, c),
        })
        .collect();
    let holds = |who: &str, v: &str| facts.get(who).is_some_and(|vals| vals.contains(&v));
    options
        .iter()
        .enumerate()
        .filter(|(_, who)| conds.iter().all(|&(want, v)| holds(who, v) == want))
        .map(|(i, _)| i)
        .collect()
}
