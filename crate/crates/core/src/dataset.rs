//! Multiple-choice question datasets: the JSON-lines record format, validation,
//! partitions, and the dataset-level transforms used by the ablations.
//!
//! One question per line:
//!
//! ```json
//! {"id":"q1","stem":"...","options":[{"label":"A","text":"..."}],"answerKey":"A",
//!  "source":{"exam":"NYSEDREGENTS_2015_8","grade":8,"year":2015},"partition":"test"}
//! ```
//!
//! The nested layout of the public ARC release (`question.stem`,
//! `question.choices`) is accepted on load as well. Files are always written
//! in the flat layout above.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_ARITY: usize = 3;
pub const MAX_RAW_ARITY: usize = 5;
pub const MAX_ARITY: usize = 8;
const LETTERS: [&str; 8] = ["A", "B", "C", "D", "E", "F", "G", "H"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Dev,
    Test,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Train, Partition::Dev, Partition::Test];

    /// Guess the partition from a file name such as `ARC-Challenge-Dev.jsonl`.
    pub fn from_file_name(path: &Path) -> Option<Partition> {
        let name = path.file_stem()?.to_str()?.to_lowercase();
        let parts: Vec<&str> = name.split(|c: char| !c.is_alphanumeric()).collect();
        if parts.contains(&"train") {
            Some(Partition::Train)
        } else if parts.contains(&"dev") || parts.contains(&"validation") {
            Some(Partition::Dev)
        } else if parts.contains(&"test") {
            Some(Partition::Test)
        } else {
            None
        }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Partition::Train => "train",
            Partition::Dev => "dev",
            Partition::Test => "test",
        })
    }
}

impl FromStr for Partition {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Partition::Train),
            "dev" | "validation" => Ok(Partition::Dev),
            "test" => Ok(Partition::Test),
            other => Err(format!("unknown partition `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerOption {
    pub label: String,
    pub text: String,
}

impl AnswerOption {
    pub fn new(label: impl Into<String>, text: impl Into<String>) -> Self {
        Self { label: label.into(), text: text.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Source {
    pub exam: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grade: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub stem: String,
    pub options: Vec<AnswerOption>,
    #[serde(rename = "answerKey")]
    pub answer_key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
    pub partition: Partition,
    /// Set on questions widened past five options by adversarial augmentation.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub augmented: bool,
    /// Links the two members of a polarity pair.
    #[serde(default, rename = "pair_id", skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
}

impl Question {
    pub fn arity(&self) -> usize {
        self.options.len()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.options.iter().map(|o| o.label.as_str())
    }

    pub fn option_index(&self, label: &str) -> Option<usize> {
        self.options.iter().position(|o| o.label == label)
    }

    pub fn correct_index(&self) -> usize {
        self.option_index(&self.answer_key).expect("validated question has its answer key among its labels")
    }

    pub fn correct_option(&self) -> &AnswerOption {
        &self.options[self.correct_index()]
    }

    /// Label for a fresh option appended after the existing ones.
    pub fn next_label(&self) -> Option<&'static str> {
        LETTERS.get(self.options.len()).copied()
    }

    /// Checks the per-question invariants under the given arity policy.
    pub fn validate(&self, policy: ArityPolicy) -> std::result::Result<(), (&'static str, String)> {
        if self.id.is_empty() {
            return Err(("id", "empty id".into()));
        }
        let (lo, hi) = policy.bounds(self.augmented);
        if self.options.len() < lo || self.options.len() > hi {
            return Err(("options", format!("arity {} outside {lo}..={hi}", self.options.len())));
        }
        let mut seen = HashSet::new();
        for opt in &self.options {
            if opt.label.is_empty() {
                return Err(("options.label", "empty label".into()));
            }
            if opt.text.trim().is_empty() {
                return Err(("options.text", format!("option {} has empty text", opt.label)));
            }
            if !seen.insert(opt.label.as_str()) {
                return Err(("options.label", format!("duplicate label {}", opt.label)));
            }
        }
        if self.answer_key.is_empty() {
            return Err(("answerKey", "missing answer key".into()));
        }
        if !seen.contains(self.answer_key.as_str()) {
            return Err(("answerKey", format!("answer key {} matches no option label", self.answer_key)));
        }
        Ok(())
    }
}

/// Accepted option counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArityPolicy {
    /// 3 to 5 options, or up to 8 when the record is flagged `augmented`.
    Standard,
    /// 2 to 8 options, for polarity pair files.
    Pairs,
}

impl ArityPolicy {
    fn bounds(self, augmented: bool) -> (usize, usize) {
        match self {
            ArityPolicy::Standard if augmented => (MIN_ARITY, MAX_ARITY),
            ArityPolicy::Standard => (MIN_ARITY, MAX_RAW_ARITY),
            ArityPolicy::Pairs => (2, MAX_ARITY),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub questions: Vec<Question>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, questions: Vec<Question>) -> Result<Self> {
        let ds = Self { name: name.into(), questions };
        ds.check_unique_ids()?;
        Ok(ds)
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }

    pub fn partition(&self, part: Partition) -> Dataset {
        Dataset {
            name: format!("{}-{part}", self.name),
            questions: self.questions.iter().filter(|q| q.partition == part).cloned().collect(),
        }
    }

    pub fn partition_counts(&self) -> BTreeMap<Partition, usize> {
        let mut counts: BTreeMap<Partition, usize> = Partition::ALL.iter().map(|p| (*p, 0)).collect();
        for q in &self.questions {
            *counts.entry(q.partition).or_default() += 1;
        }
        counts
    }

    /// Number of questions per option count.
    pub fn arity_histogram(&self) -> BTreeMap<usize, usize> {
        let mut hist = BTreeMap::new();
        for q in &self.questions {
            *hist.entry(q.arity()).or_default() += 1;
        }
        hist
    }

    fn check_unique_ids(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for q in &self.questions {
            if !seen.insert(q.id.as_str()) {
                return Err(Error::Dataset(format!("duplicate question id {}", q.id)));
            }
        }
        Ok(())
    }

    /// Every exam (questions sharing a `source`) must sit in exactly one
    /// partition. Questions without a source are unconstrained.
    pub fn check_exam_partitions(&self) -> Result<()> {
        let mut seen: HashMap<&Source, Partition> = HashMap::new();
        for q in &self.questions {
            let Some(src) = &q.source else { continue };
            match seen.get(src) {
                Some(&p) if p != q.partition => {
                    return Err(Error::Dataset(format!(
                        "exam {} is split across partitions {p} and {}",
                        src.exam, q.partition
                    )));
                }
                Some(_) => {}
                None => {
                    seen.insert(src, q.partition);
                }
            }
        }
        Ok(())
    }

    /// Merge datasets, keeping the first copy of any repeated question id.
    pub fn union(name: impl Into<String>, parts: &[Dataset]) -> Dataset {
        let mut seen = HashSet::new();
        let mut questions = Vec::new();
        for ds in parts {
            for q in &ds.questions {
                if seen.insert(q.id.clone()) {
                    questions.push(q.clone());
                }
            }
        }
        Dataset { name: name.into(), questions }
    }
}

/// Uppercase letter labels; numerals `1`..`8` become `A`..`H`.
pub fn normalize_label(raw: &str) -> String {
    let trimmed = raw.trim();
    if let Ok(n) = trimmed.parse::<usize>() {
        if (1..=LETTERS.len()).contains(&n) {
            return LETTERS[n - 1].to_string();
        }
    }
    trimmed.to_uppercase()
}

pub fn letter_label(index: usize) -> &'static str {
    LETTERS[index]
}

#[derive(Deserialize)]
struct RawRecord {
    id: Option<String>,
    stem: Option<String>,
    options: Option<Vec<RawOption>>,
    question: Option<RawNested>,
    #[serde(rename = "answerKey")]
    answer_key: Option<String>,
    source: Option<Source>,
    partition: Option<String>,
    #[serde(default)]
    augmented: bool,
    pair_id: Option<String>,
}

#[derive(Deserialize)]
struct RawNested {
    stem: String,
    choices: Vec<RawOption>,
}

#[derive(Deserialize)]
struct RawOption {
    label: String,
    text: String,
}

struct LineError {
    field: &'static str,
    message: String,
}

impl LineError {
    fn new(field: &'static str, message: impl Into<String>) -> Self {
        Self { field, message: message.into() }
    }
}

fn parse_record(
    line: &str,
    default_partition: Partition,
    policy: ArityPolicy,
) -> std::result::Result<Question, LineError> {
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| LineError::new("record", e.to_string()))?;
    let id = raw.id.ok_or_else(|| LineError::new("id", "missing id"))?;
    let (stem, raw_options) = match (raw.stem, raw.options, raw.question) {
        (Some(stem), Some(opts), None) => (stem, opts),
        (None, None, Some(nested)) => (nested.stem, nested.choices),
        (_, None, None) => return Err(LineError::new("options", "missing options")),
        (None, Some(_), None) => return Err(LineError::new("stem", "missing stem")),
        _ => return Err(LineError::new("question", "use either flat stem/options or nested question, not both")),
    };
    let answer_key = raw
        .answer_key
        .map(|k| normalize_label(&k))
        .filter(|k| !k.is_empty())
        .ok_or_else(|| LineError::new("answerKey", "missing answer key"))?;
    let partition = match raw.partition {
        Some(p) => p.parse().map_err(|e: String| LineError::new("partition", e))?,
        None => default_partition,
    };
    let q = Question {
        id,
        stem,
        options: raw_options
            .into_iter()
            .map(|o| AnswerOption { label: normalize_label(&o.label), text: o.text })
            .collect(),
        answer_key,
        source: raw.source,
        partition,
        augmented: raw.augmented,
        pair_id: raw.pair_id,
    };
    q.validate(policy).map_err(|(field, message)| LineError::new(field, message))?;
    Ok(q)
}

/// Load and validate a JSON-lines question file. Records without a
/// `partition` take it from the file name (`...-Train.jsonl`), else `test`.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    load_with_policy(path.as_ref(), ArityPolicy::Standard)
}

pub fn load_with_policy(path: &Path, policy: ArityPolicy) -> Result<Dataset> {
    let file = fs::File::open(path)?;
    let default_partition = Partition::from_file_name(path).unwrap_or(Partition::Test);
    let display = path.display().to_string();
    let mut questions = Vec::new();
    let mut ids: HashMap<String, usize> = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let q = parse_record(&line, default_partition, policy).map_err(|e| Error::Validation {
            path: display.clone(),
            line: lineno,
            field: e.field,
            message: e.message,
        })?;
        if let Some(first) = ids.insert(q.id.clone(), lineno) {
            return Err(Error::Validation {
                path: display,
                line: lineno,
                field: "id",
                message: format!("duplicate id {} (first seen on line {first})", q.id),
            });
        }
        questions.push(q);
    }
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset").to_string();
    Ok(Dataset { name, questions })
}

pub fn write_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    write_jsonl(ds, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_jsonl<W: Write>(ds: &Dataset, out: &mut W) -> Result<()> {
    for q in &ds.questions {
        serde_json::to_writer(&mut *out, q)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Mean over questions of `1 / arity`: the accuracy of uniform guessing.
pub fn expected_random_score(ds: &Dataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::InvalidArgument("expected_random_score of an empty dataset".into()));
    }
    let total: f64 = ds.questions.iter().map(|q| 1.0 / q.arity() as f64).sum();
    Ok(total / ds.len() as f64)
}

/// Answer-only view: every stem replaced by the empty string.
pub fn mask_stems(ds: &Dataset) -> Dataset {
    let mut masked = ds.clone();
    for q in &mut masked.questions {
        q.stem.clear();
    }
    masked.name = format!("{}-answer-only", ds.name);
    masked
}

/// Original/flipped polarity pairs, matched on `pair_id`. The member that
/// appears first in the file is the original.
pub fn load_pairs(path: impl AsRef<Path>) -> Result<Vec<(Question, Question)>> {
    let ds = load_with_policy(path.as_ref(), ArityPolicy::Pairs)?;
    pair_up(ds.questions)
}

pub fn pair_up(questions: Vec<Question>) -> Result<Vec<(Question, Question)>> {
    let mut open: Vec<(String, Question)> = Vec::new();
    let mut pairs = Vec::new();
    for q in questions {
        let pid = q.pair_id.clone().ok_or_else(|| Error::Dataset(format!("question {} has no pair_id", q.id)))?;
        match open.iter().position(|(p, _)| *p == pid) {
            Some(i) => {
                let (_, first) = open.remove(i);
                pairs.push((first, q));
            }
            None => open.push((pid, q)),
        }
    }
    if let Some((pid, _)) = open.first() {
        return Err(Error::Dataset(format!("pair {pid} has only one member")));
    }
    Ok(pairs)
}
