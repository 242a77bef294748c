//! N-gram co-occurrence statistics and the PMI solver.
//!
//! Each corpus line is cut into windows of `window_size` tokens (stride 1; a
//! line shorter than the window is one window). For every n-gram we keep the
//! sorted list of windows that contain it, so the joint count of two grams is
//! the size of a list intersection.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::Question;
use crate::error::{Error, Result};
use crate::text::tokenize;

use super::prediction::{Solver, SolverPrediction};

pub const DEFAULT_WINDOW: usize = 11;
pub const DEFAULT_EPSILON: f64 = 0.1;
const SNAPSHOT_FORMAT: &str = "sciqa-ngrams";
const SNAPSHOT_VERSION: u32 = 1;

/// Unigrams, contiguous bigrams and trigrams, and skip-bigrams over exactly
/// one skipped token. Grams are space-joined; a skip-bigram is written
/// `a _ c`, which no contiguous trigram can collide with since `_` never
/// appears inside a token.
pub fn extract_ngrams(text: &str) -> BTreeSet<String> {
    ngrams_of_tokens(&tokenize(text))
}

fn ngrams_of_tokens<S: AsRef<str>>(tokens: &[S]) -> BTreeSet<String> {
    let t: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
    let mut grams = BTreeSet::new();
    for i in 0..t.len() {
        grams.insert(t[i].to_string());
        if i + 1 < t.len() {
            grams.insert(format!("{} {}", t[i], t[i + 1]));
        }
        if i + 2 < t.len() {
            grams.insert(format!("{} {} {}", t[i], t[i + 1], t[i + 2]));
            grams.insert(format!("{} _ {}", t[i], t[i + 2]));
        }
    }
    grams
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Smoothing {
    /// Maximum-likelihood estimates; a pair never seen together has PMI -inf.
    None,
    /// `epsilon` pseudo-count added to the joint count only.
    AddEpsilon { epsilon: f64 },
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing::AddEpsilon { epsilon: DEFAULT_EPSILON }
    }
}

/// `ln( p(x,y) / (p(x) p(y)) )` from raw window counts.
pub fn pmi_from_counts(pair: u64, count_x: u64, count_y: u64, windows: u64, smoothing: Smoothing) -> f64 {
    let joint = match smoothing {
        Smoothing::None => pair as f64,
        Smoothing::AddEpsilon { epsilon } => pair as f64 + epsilon,
    };
    let w = windows as f64;
    ((joint / w) / ((count_x as f64 / w) * (count_y as f64 / w))).ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGramStats {
    window_size: usize,
    window_count: u64,
    smoothing: Smoothing,
    postings: HashMap<String, Vec<u32>>,
}

impl NGramStats {
    pub fn build<I, S>(corpus: I, window_size: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if window_size < 2 {
            return Err(Error::InvalidArgument(format!("window size must be >= 2, got {window_size}")));
        }
        let mut postings: HashMap<String, Vec<u32>> = HashMap::new();
        let mut window_count: u32 = 0;
        for line in corpus {
            for window in windows(&tokenize(line.as_ref()), window_size) {
                for g in ngrams_of_tokens(window) {
                    postings.entry(g).or_default().push(window_count);
                }
                window_count += 1;
            }
        }
        Ok(Self { window_size, window_count: window_count as u64, smoothing: Smoothing::default(), postings })
    }

    pub fn with_smoothing(mut self, smoothing: Smoothing) -> Self {
        self.smoothing = smoothing;
        self
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn window_count(&self) -> u64 {
        self.window_count
    }

    pub fn contains(&self, gram: &str) -> bool {
        self.postings.contains_key(gram)
    }

    pub fn gram_count(&self, gram: &str) -> u64 {
        self.postings.get(gram).map_or(0, |p| p.len() as u64)
    }

    pub fn pair_count(&self, x: &str, y: &str) -> u64 {
        match (self.postings.get(x), self.postings.get(y)) {
            (Some(a), Some(b)) => intersection_size(a, b) as u64,
            _ => 0,
        }
    }

    pub fn pmi(&self, x: &str, y: &str) -> Result<f64> {
        if self.window_count == 0 {
            return Err(Error::InvalidArgument("PMI over an empty corpus".into()));
        }
        let (cx, cy) = (self.gram_count(x), self.gram_count(y));
        if cx == 0 || cy == 0 {
            let missing = if cx == 0 { x } else { y };
            return Err(Error::InvalidArgument(format!("n-gram `{missing}` does not occur in the corpus")));
        }
        Ok(pmi_from_counts(self.pair_count(x, y), cx, cy, self.window_count, self.smoothing))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let snap = StatsSnapshot {
            format: SNAPSHOT_FORMAT.into(),
            version: SNAPSHOT_VERSION,
            window_size: self.window_size,
            window_count: self.window_count,
            smoothing: self.smoothing,
            grams: self.postings.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        };
        fs::write(path, serde_json::to_vec(&snap)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let snap: StatsSnapshot = serde_json::from_slice(&fs::read(path)?)?;
        if snap.format != SNAPSHOT_FORMAT || snap.version != SNAPSHOT_VERSION {
            return Err(Error::Snapshot {
                path: path.to_path_buf(),
                message: format!("expected {SNAPSHOT_FORMAT} v{SNAPSHOT_VERSION}"),
            });
        }
        Ok(Self {
            window_size: snap.window_size,
            window_count: snap.window_count,
            smoothing: snap.smoothing,
            postings: snap.grams.into_iter().collect(),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct StatsSnapshot {
    format: String,
    version: u32,
    window_size: usize,
    window_count: u64,
    smoothing: Smoothing,
    grams: BTreeMap<String, Vec<u32>>,
}

pub(crate) fn windows<T>(tokens: &[T], size: usize) -> impl Iterator<Item = &[T]> {
    let count = match tokens.len() {
        0 => 0,
        n if n <= size => 1,
        n => n - size + 1,
    };
    (0..count).map(move |i| &tokens[i..(i + size).min(tokens.len())])
}

fn intersection_size(a: &[u32], b: &[u32]) -> usize {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if small.len() * 16 < large.len() {
        return small.iter().filter(|x| large.binary_search(x).is_ok()).count();
    }
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < small.len() && j < large.len() {
        match small[i].cmp(&large[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Mean PMI between the stem's n-grams and each option's n-grams.
pub struct PmiSolver {
    stats: Arc<NGramStats>,
}

impl PmiSolver {
    pub fn new(stats: Arc<NGramStats>) -> Self {
        Self { stats }
    }

    fn score(&self, stem_grams: &[&String], option: &str) -> f64 {
        let option_grams: Vec<String> = extract_ngrams(option).into_iter().filter(|g| self.stats.contains(g)).collect();
        let mut sum = 0.0;
        let mut n = 0usize;
        for x in stem_grams {
            for y in &option_grams {
                if let Ok(v) = self.stats.pmi(x, y) {
                    if v.is_finite() {
                        sum += v;
                        n += 1;
                    }
                }
            }
        }
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

impl Solver for PmiSolver {
    fn name(&self) -> &str {
        "pmi"
    }

    fn solve(&self, q: &Question) -> SolverPrediction {
        let stem = extract_ngrams(&q.stem);
        let stem_grams: Vec<&String> = stem.iter().filter(|g| self.stats.contains(g)).collect();
        let confidences = q.options.iter().map(|o| self.score(&stem_grams, &o.text)).collect();
        SolverPrediction::new(self.name(), q, confidences)
    }
}
