//! Accuracy reports and the ablations built on them.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{letter_label, AnswerOption, Dataset, Question};
use crate::error::{Error, Result};
use crate::index::SentenceIndex;
use crate::solver::{argmax_label, SolverPrediction};
use crate::text::stemmed_content_words;

/// What a system says about one question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemOutput {
    pub chosen: String,
    /// Aligned with the options; higher is more preferred.
    pub scores: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub predictions: Vec<SolverPrediction>,
}

impl SystemOutput {
    pub fn from_scores(q: &Question, scores: Vec<f64>) -> Self {
        let chosen = argmax_label(q, &scores).to_string();
        Self { chosen, scores, predictions: Vec::new() }
    }

    /// A bare choice, scored one-hot.
    pub fn choice(q: &Question, label: &str) -> Self {
        let scores = q.options.iter().map(|o| f64::from(o.label == label)).collect();
        Self { chosen: label.to_string(), scores, predictions: Vec::new() }
    }
}

pub trait AnswerSystem: Send + Sync {
    fn answer(&self, q: &Question) -> SystemOutput;
}

impl<F> AnswerSystem for F
where
    F: Fn(&Question) -> SystemOutput + Send + Sync,
{
    fn answer(&self, q: &Question) -> SystemOutput {
        self(q)
    }
}

/// Always answers the key.
pub struct OracleSystem;

impl AnswerSystem for OracleSystem {
    fn answer(&self, q: &Question) -> SystemOutput {
        SystemOutput::choice(q, &q.answer_key)
    }
}

/// Uniform guesses, reproducible per (seed, question id) regardless of
/// evaluation order or thread count.
pub struct RandomSystem {
    pub seed: u64,
}

impl AnswerSystem for RandomSystem {
    fn answer(&self, q: &Question) -> SystemOutput {
        let mut h = self.seed ^ 0x9E37_79B9_7F4A_7C15;
        for b in q.id.bytes() {
            h = (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01B3);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(h);
        let i = rng.gen_range(0..q.arity());
        SystemOutput::choice(q, &q.options[i].label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionRecord {
    pub id: String,
    pub source: String,
    pub stem: String,
    pub options: Vec<AnswerOption>,
    pub gold: String,
    pub chosen: String,
    pub correct: bool,
    pub scores: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub predictions: Vec<SolverPrediction>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub n: usize,
    pub correct: usize,
}

impl Tally {
    pub fn accuracy(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.correct as f64 / self.n as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub n: usize,
    pub n_correct: usize,
    pub accuracy: f64,
    /// Keyed by exam name (or "unknown").
    pub by_source: BTreeMap<String, Tally>,
    pub records: Vec<QuestionRecord>,
}

impl EvalReport {
    pub fn from_records(dataset: impl Into<String>, records: Vec<QuestionRecord>) -> Self {
        let mut by_source: BTreeMap<String, Tally> = BTreeMap::new();
        for r in &records {
            let t = by_source.entry(r.source.clone()).or_default();
            t.n += 1;
            t.correct += usize::from(r.correct);
        }
        let n = records.len();
        let n_correct = records.iter().filter(|r| r.correct).count();
        let accuracy = if n == 0 { 0.0 } else { n_correct as f64 / n as f64 };
        Self { dataset: dataset.into(), n, n_correct, accuracy, by_source, records }
    }

    /// Accuracy of each constituent solver on its own, when recorded.
    pub fn solver_accuracy(&self) -> BTreeMap<String, Tally> {
        let mut out: BTreeMap<String, Tally> = BTreeMap::new();
        for r in &self.records {
            for p in &r.predictions {
                let t = out.entry(p.solver.clone()).or_default();
                t.n += 1;
                t.correct += usize::from(p.chosen == r.gold);
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dataset   {}", self.dataset);
        let _ = writeln!(s, "accuracy  {:.4} ({}/{})", self.accuracy, self.n_correct, self.n);
        for (source, t) in &self.by_source {
            let _ = writeln!(s, "  {source:<24} {:.4} ({}/{})", t.accuracy(), t.correct, t.n);
        }
        let solvers = self.solver_accuracy();
        if !solvers.is_empty() {
            let _ = writeln!(s, "solvers");
            for (name, t) in solvers {
                let _ = writeln!(s, "  {name:<24} {:.4} ({}/{})", t.accuracy(), t.correct, t.n);
            }
        }
        s
    }
}

fn source_key(q: &Question) -> String {
    q.source.as_ref().map(|s| s.exam.clone()).unwrap_or_else(|| "unknown".into())
}

/// Score every question. Records come back in dataset order whatever the
/// thread count.
pub fn evaluate(system: &dyn AnswerSystem, ds: &Dataset) -> EvalReport {
    let records = ds
        .questions
        .par_iter()
        .map(|q| {
            let out = system.answer(q);
            QuestionRecord {
                id: q.id.clone(),
                source: source_key(q),
                stem: q.stem.clone(),
                options: q.options.clone(),
                gold: q.answer_key.clone(),
                correct: out.chosen == q.answer_key,
                chosen: out.chosen,
                scores: out.scores,
                predictions: out.predictions,
            }
        })
        .collect();
    EvalReport::from_records(&ds.name, records)
}

/// [`evaluate`] on a dedicated pool of `workers` threads.
pub fn evaluate_with_workers(system: &dyn AnswerSystem, ds: &Dataset, workers: usize) -> Result<EvalReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(pool.install(|| evaluate(system, ds)))
}

fn normalized(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Distinct option texts of every question other than `exclude_id`, in
/// first-appearance order.
pub fn harvest_pool(ds: &Dataset, exclude_id: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    ds.questions
        .iter()
        .filter(|q| q.id != exclude_id)
        .flat_map(|q| q.options.iter())
        .filter(|o| seen.insert(normalized(&o.text)))
        .map(|o| o.text.clone())
        .collect()
}

/// Best distractor score minus the correct option's score.
fn margin(q: &Question, scores: &[f64]) -> f64 {
    let gold = q.correct_index();
    let best_other =
        scores.iter().enumerate().filter(|&(i, _)| i != gold).map(|(_, &s)| s).fold(f64::NEG_INFINITY, f64::max);
    best_other - scores[gold]
}

pub const NO_POOL_FLAG: &str = "adversarial: empty pool";

/// Grow `q` to `target_arity` options by repeatedly adding the pool text
/// that most raises the system's best distractor relative to the correct
/// option. The key and existing options are untouched; new labels continue
/// the letter sequence. Texts equal to an existing option are skipped.
///
/// Returns the question and any warning flags.
pub fn adversarial_augment(
    system: &dyn AnswerSystem,
    q: &Question,
    pool: &[String],
    target_arity: usize,
) -> (Question, Vec<String>) {
    let mut existing: HashSet<String> = q.options.iter().map(|o| normalized(&o.text)).collect();
    let mut candidates: Vec<&String> = Vec::new();
    for text in pool {
        let key = normalized(text);
        if !key.is_empty() && existing.insert(key) {
            candidates.push(text);
        }
    }
    if candidates.is_empty() {
        return (q.clone(), vec![NO_POOL_FLAG.to_string()]);
    }
    let mut out = q.clone();
    while out.arity() < target_arity && !candidates.is_empty() {
        let label = letter_label(out.arity());
        let mut best: Option<(f64, usize)> = None;
        for (ci, text) in candidates.iter().enumerate() {
            let mut trial = out.clone();
            trial.options.push(AnswerOption::new(label, text.as_str()));
            trial.augmented = true;
            let m = margin(&trial, &system.answer(&trial).scores);
            if best.is_none_or(|(bm, _)| m > bm) {
                best = Some((m, ci));
            }
        }
        let (_, ci) = best.expect("candidates non-empty");
        let text = candidates.remove(ci);
        out.options.push(AnswerOption::new(label, text.as_str()));
        out.augmented = true;
    }
    (out, Vec::new())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedReport {
    pub pairs: usize,
    pub both_right: usize,
    pub fraction: f64,
    pub original_accuracy: f64,
    pub flipped_accuracy: f64,
}

/// Fraction of (original, flipped) pairs with both members answered
/// correctly.
pub fn paired_eval(system: &dyn AnswerSystem, pairs: &[(Question, Question)]) -> Result<PairedReport> {
    for (a, b) in pairs {
        if a.answer_key == b.answer_key {
            return Err(Error::Dataset(format!("pair {} / {} share answer key {}", a.id, b.id, a.answer_key)));
        }
        if a.arity() != b.arity() {
            return Err(Error::Dataset(format!("pair {} / {} differ in arity", a.id, b.id)));
        }
    }
    let results: Vec<(bool, bool)> = pairs
        .par_iter()
        .map(|(a, b)| (system.answer(a).chosen == a.answer_key, system.answer(b).chosen == b.answer_key))
        .collect();
    let n = pairs.len();
    let frac = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    let both_right = results.iter().filter(|(a, b)| *a && *b).count();
    Ok(PairedReport {
        pairs: n,
        both_right,
        fraction: frac(both_right),
        original_accuracy: frac(results.iter().filter(|r| r.0).count()),
        flipped_accuracy: frac(results.iter().filter(|r| r.1).count()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureCategory {
    SupportForCorrect,
    NoSupportForCorrect,
    SupportForIncorrect,
    Unclassified,
}

impl FailureCategory {
    pub const ALL: [FailureCategory; 4] = [
        FailureCategory::SupportForCorrect,
        FailureCategory::NoSupportForCorrect,
        FailureCategory::SupportForIncorrect,
        FailureCategory::Unclassified,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureCategory::SupportForCorrect => "support-for-correct",
            FailureCategory::NoSupportForCorrect => "no-support-for-correct",
            FailureCategory::SupportForIncorrect => "support-for-incorrect",
            FailureCategory::Unclassified => "unclassified",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub id: String,
    pub category: FailureCategory,
    pub overlap_correct: f64,
    pub overlap_chosen: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    /// Always true: categories come from a lexical heuristic, not a reader.
    pub automated_proxy: bool,
    pub threshold: f64,
    pub failures: usize,
    pub counts: BTreeMap<FailureCategory, usize>,
    pub records: Vec<FailureRecord>,
}

impl SupportReport {
    pub fn to_text(&self) -> String {
        let mut s = format!("failures  {} (automated lexical proxy, threshold {})\n", self.failures, self.threshold);
        for c in FailureCategory::ALL {
            let k = self.counts.get(&c).copied().unwrap_or(0);
            let pct = if self.failures == 0 { 0.0 } else { 100.0 * k as f64 / self.failures as f64 };
            let _ = writeln!(s, "  {:<24} {k:>5} {pct:5.1}%", c.as_str());
        }
        s
    }
}

/// Share of `option` words found in the sentence; `None` when the option has
/// no content words.
pub fn option_coverage(option: &str, sentence: &str) -> Option<f64> {
    let opt: BTreeSet<String> = stemmed_content_words(option).into_iter().collect();
    if opt.is_empty() {
        return None;
    }
    let sent: BTreeSet<String> = stemmed_content_words(sentence).into_iter().collect();
    Some(opt.intersection(&sent).count() as f64 / opt.len() as f64)
}

/// Classify every failure by whether the sentences retrieved for the correct
/// and chosen options (top `k` each) lexically cover those options.
pub fn support_report(report: &EvalReport, index: &SentenceIndex, threshold: f64, k: usize) -> Result<SupportReport> {
    if k == 0 {
        return Err(Error::InvalidArgument("retrieval depth must be >= 1".into()));
    }
    let mut counts: BTreeMap<FailureCategory, usize> = FailureCategory::ALL.iter().map(|&c| (c, 0)).collect();
    let mut records = Vec::new();
    for r in report.records.iter().filter(|r| !r.correct) {
        let text_of = |label: &str| r.options.iter().find(|o| o.label == label).map(|o| o.text.as_str());
        let (correct, chosen) = (text_of(&r.gold), text_of(&r.chosen));
        let mut sentences = Vec::new();
        for opt in [correct, chosen].into_iter().flatten() {
            for hit in index.retrieve(&format!("{} {}", r.stem, opt), k)? {
                sentences.push(hit.text);
            }
        }
        let best = |opt: Option<&str>| -> Option<f64> {
            let opt = opt?;
            let covs: Vec<f64> = sentences.iter().filter_map(|s| option_coverage(opt, s)).collect();
            if stemmed_content_words(opt).is_empty() {
                None
            } else {
                Some(covs.into_iter().fold(0.0, f64::max))
            }
        };
        let (oc, ox) = (best(correct), best(chosen));
        let category = match (oc, ox) {
            (Some(c), _) if c >= threshold => FailureCategory::SupportForCorrect,
            (Some(_), Some(x)) if x >= threshold => FailureCategory::SupportForIncorrect,
            (Some(_), Some(_)) => FailureCategory::NoSupportForCorrect,
            _ => FailureCategory::Unclassified,
        };
        *counts.get_mut(&category).expect("all categories seeded") += 1;
        records.push(FailureRecord {
            id: r.id.clone(),
            category,
            overlap_correct: oc.unwrap_or(f64::NAN),
            overlap_chosen: ox.unwrap_or(f64::NAN),
        });
    }
    Ok(SupportReport { automated_proxy: true, threshold, failures: records.len(), counts, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Partition;
    use crate::index::Bm25Params;

    fn question(id: &str, stem: &str, options: &[&str], key: &str) -> Question {
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

    fn four_way(n: usize) -> Dataset {
        let qs = (0..n).map(|i| question(&format!("q{i}"), "s", &["a", "b", "c", "d"], letter_label(i % 4))).collect();
        Dataset::new("four", qs).unwrap()
    }

    #[test]
    fn oracle_and_random_accuracy() {
        let ds = four_way(1000);
        let oracle = evaluate(&OracleSystem, &ds);
        assert_eq!((oracle.n, oracle.n_correct, oracle.accuracy), (1000, 1000, 1.0));
        let random = evaluate(&RandomSystem { seed: 11 }, &ds);
        assert!((random.accuracy - 0.25).abs() < 0.04, "{}", random.accuracy);
        assert_eq!(random.by_source.values().map(|t| t.n).sum::<usize>(), random.n);
    }

    #[test]
    fn order_is_stable_across_worker_counts() {
        let ds = four_way(200);
        let one = evaluate_with_workers(&RandomSystem { seed: 5 }, &ds, 1).unwrap();
        let many = evaluate_with_workers(&RandomSystem { seed: 5 }, &ds, 8).unwrap();
        assert_eq!(one, many);
        assert!(one.records.iter().zip(&ds.questions).all(|(r, q)| r.id == q.id));
    }

    /// Prefers longer option texts.
    fn by_length(q: &Question) -> SystemOutput {
        SystemOutput::from_scores(q, q.options.iter().map(|o| o.text.len() as f64).collect())
    }

    #[test]
    fn augmentation_adds_the_most_fooling_option() {
        let q = question("q", "s", &["aaaa", "b", "c", "d"], "A");
        let pool: Vec<String> = ["aaaa", "xx", "yyyyyy", "zzz", "wwwww"].iter().map(|s| s.to_string()).collect();
        let (aug, flags) = adversarial_augment(&by_length, &q, &pool, 6);
        assert!(flags.is_empty());
        let texts: Vec<&str> = aug.options.iter().map(|o| o.text.as_str()).collect();
        // After "yyyyyy" nothing raises the margin further; ties keep pool order.
        assert_eq!(texts, ["aaaa", "b", "c", "d", "yyyyyy", "xx"]);
        assert_eq!(aug.answer_key, "A");
        assert_eq!(aug.options[4].label, "E");
        assert!(aug.augmented);
        assert_eq!(by_length(&aug).chosen, "E");
    }

    #[test]
    fn empty_or_redundant_pool_is_flagged() {
        let q = question("q", "s", &["a", "b", "c", "d"], "B");
        let (same, flags) = adversarial_augment(&by_length, &q, &[], 8);
        assert_eq!(same, q);
        assert_eq!(flags, [NO_POOL_FLAG]);
        let (same, flags) = adversarial_augment(&by_length, &q, &["B ".to_string()], 8);
        assert_eq!(same, q);
        assert_eq!(flags.len(), 1);
    }

    #[test]
    fn pool_excludes_own_question() {
        let a = question("a", "s", &["x", "y", "z"], "A");
        let b = question("b", "s", &["y", "w", "v"], "A");
        let ds = Dataset::new("d", vec![a, b]).unwrap();
        assert_eq!(harvest_pool(&ds, "a"), ["y", "w", "v"]);
    }

    fn pairs(n: usize) -> Vec<(Question, Question)> {
        (0..n)
            .map(|i| {
                let o = question(&format!("p{i}a"), "which is more", &["x", "y"], "A");
                let f = question(&format!("p{i}b"), "which is less", &["x", "y"], "B");
                (o, f)
            })
            .collect()
    }

    #[test]
    fn paired_laws() {
        let ps = pairs(10_000);
        assert_eq!(paired_eval(&OracleSystem, &ps).unwrap().fraction, 1.0);
        let stubborn = |q: &Question| SystemOutput::choice(q, "A");
        let r = paired_eval(&stubborn, &ps).unwrap();
        assert_eq!(r.fraction, 0.0);
        assert_eq!(r.original_accuracy, 1.0);
        let r = paired_eval(&RandomSystem { seed: 1 }, &ps).unwrap();
        assert!((r.fraction - 0.25).abs() < 0.04, "{}", r.fraction);
        assert!(r.fraction <= r.original_accuracy.min(r.flipped_accuracy));
        let mut bad = pairs(1);
        bad[0].1.answer_key = "A".into();
        assert!(paired_eval(&OracleSystem, &bad).is_err());
    }

    #[test]
    fn support_categories() {
        let index = SentenceIndex::build(
            ["Magnets attract iron filings.", "Filter paper separates sand from water."],
            Bm25Params::default(),
        );
        let q1 = question("q1", "What separates iron filings from pepper?", &["magnet", "voltmeter"], "A");
        let q2 = question("q2", "What is blorp?", &["zork", "quux"], "A");
        let q3 = question("q3", "What separates sand from water?", &["voltmeter", "filter paper"], "A");
        let ds = Dataset::new("d", vec![q1, q2, q3]).unwrap();
        let always_b = |q: &Question| SystemOutput::choice(q, "B");
        let report = evaluate(&always_b, &ds);
        let support = support_report(&report, &index, 0.5, 5).unwrap();
        let cats: Vec<FailureCategory> = support.records.iter().map(|r| r.category).collect();
        assert_eq!(
            cats,
            [
                FailureCategory::SupportForCorrect,
                FailureCategory::NoSupportForCorrect,
                FailureCategory::SupportForIncorrect
            ]
        );
        assert_eq!(support.counts.values().sum::<usize>(), support.failures);
        assert!(support.to_text().contains("automated"));
    }
}
