//! Rule-based subject-predicate-object extraction.
//!
//! No POS tagger: a sentence matches when it reads as
//! `NP VERB-GROUP NP (PREP NP)*`, where the verb group is found with a
//! closed verb lexicon (plus auxiliaries) and a preposition directly after
//! the verb folds into the predicate ("grows into").

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::tokenize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tuple {
    pub subject: Vec<String>,
    pub predicate: Vec<String>,
    pub objects: Vec<Vec<String>>,
    pub sid: u32,
}

impl Tuple {
    pub fn new(subject: &str, predicate: &str, objects: &[&str], sid: u32) -> Self {
        Self {
            subject: tokenize(subject),
            predicate: tokenize(predicate),
            objects: objects.iter().map(|o| tokenize(o)).collect(),
            sid,
        }
    }

    pub fn fields(&self) -> impl Iterator<Item = (Field, &[String])> {
        [(Field::Subject, self.subject.as_slice()), (Field::Predicate, self.predicate.as_slice())]
            .into_iter()
            .chain(self.objects.iter().enumerate().map(|(i, o)| (Field::Object(i), o.as_slice())))
    }

    /// Tab-separated `subject, predicate, objects..., sid`.
    pub fn to_tsv(&self) -> String {
        let mut cols = vec![self.subject.join(" "), self.predicate.join(" ")];
        cols.extend(self.objects.iter().map(|o| o.join(" ")));
        cols.push(self.sid.to_string());
        cols.join("\t")
    }

    pub fn from_tsv(line: &str) -> std::result::Result<Self, String> {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 4 {
            return Err(format!("expected at least 4 columns, got {}", cols.len()));
        }
        let sid = cols[cols.len() - 1].parse().map_err(|_| format!("bad sid `{}`", cols[cols.len() - 1]))?;
        let span = |s: &str| s.split(' ').filter(|t| !t.is_empty()).map(str::to_string).collect::<Vec<_>>();
        let t = Tuple {
            subject: span(cols[0]),
            predicate: span(cols[1]),
            objects: cols[2..cols.len() - 1].iter().map(|c| span(c)).collect(),
            sid,
        };
        if t.subject.is_empty() || t.predicate.is_empty() || t.objects.iter().any(Vec::is_empty) {
            return Err("empty span".into());
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Field {
    Subject,
    Predicate,
    Object(usize),
}

pub fn write_tuples(tuples: &[Tuple], path: impl AsRef<Path>) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for t in tuples {
        writeln!(out, "{}", t.to_tsv())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_tuples(path: impl AsRef<Path>) -> Result<Vec<Tuple>> {
    let text = fs::read_to_string(path.as_ref())?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            Tuple::from_tsv(l).map_err(|message| Error::Validation {
                path: path.as_ref().display().to_string(),
                line: i + 1,
                field: "tuple",
                message,
            })
        })
        .collect()
}

const BASE_VERBS: &[&str] = &[
    "absorb",
    "affect",
    "allow",
    "attract",
    "become",
    "begin",
    "block",
    "boil",
    "break",
    "burn",
    "carry",
    "cause",
    "change",
    "collect",
    "combine",
    "conduct",
    "consume",
    "contain",
    "control",
    "convert",
    "cool",
    "cover",
    "create",
    "decompose",
    "depend",
    "destroy",
    "digest",
    "dissolve",
    "eat",
    "emit",
    "enter",
    "erode",
    "evaporate",
    "expand",
    "feed",
    "filter",
    "float",
    "flow",
    "form",
    "freeze",
    "get",
    "give",
    "grow",
    "heat",
    "help",
    "hold",
    "hunt",
    "include",
    "increase",
    "decrease",
    "insulate",
    "keep",
    "lay",
    "lead",
    "live",
    "lose",
    "make",
    "measure",
    "melt",
    "move",
    "need",
    "orbit",
    "pass",
    "produce",
    "protect",
    "provide",
    "pull",
    "pump",
    "push",
    "receive",
    "reduce",
    "reflect",
    "release",
    "remove",
    "repel",
    "reproduce",
    "require",
    "resist",
    "rotate",
    "run",
    "separate",
    "shine",
    "sink",
    "spin",
    "spread",
    "store",
    "supply",
    "support",
    "surround",
    "take",
    "transfer",
    "transform",
    "transport",
    "trap",
    "travel",
    "turn",
    "use",
    "vibrate",
    "warm",
    "weigh",
];

const IRREGULAR: &[&str] = &[
    "is", "are", "was", "were", "has", "have", "had", "became", "began", "begun", "broke", "broken", "ate", "eaten",
    "fed", "froze", "frozen", "got", "gave", "given", "grew", "grown", "held", "kept", "laid", "led", "lost", "made",
    "ran", "sank", "sunk", "spun", "spread", "took", "taken", "shone",
];

const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "can", "cannot", "could", "will", "would", "may", "might", "must",
    "should", "do", "does", "did", "not", "often", "usually", "also", "always",
];

const PREPOSITIONS: &[&str] = &[
    "about", "across", "after", "against", "along", "around", "as", "at", "before", "between", "by", "during", "for",
    "from", "in", "inside", "into", "like", "near", "of", "off", "on", "onto", "out", "over", "through", "to",
    "toward", "towards", "under", "up", "with", "within", "without",
];

const WH_WORDS: &[&str] = &["what", "which", "who", "whom", "whose", "why", "how", "where", "when"];

fn inflections(base: &str) -> Vec<String> {
    let mut forms = vec![base.to_string()];
    let third = if base.ends_with('y') && !base.ends_with("ay") && !base.ends_with("ey") {
        format!("{}ies", &base[..base.len() - 1])
    } else if ["s", "sh", "ch", "x", "z", "o"].iter().any(|s| base.ends_with(s)) {
        format!("{base}es")
    } else {
        format!("{base}s")
    };
    forms.push(third);
    let stem_e = base.strip_suffix('e').unwrap_or(base);
    forms.push(if base.ends_with('e') {
        format!("{base}d")
    } else if base.ends_with('y') && !base.ends_with("ay") && !base.ends_with("ey") {
        format!("{}ied", &base[..base.len() - 1])
    } else {
        format!("{base}ed")
    });
    forms.push(format!("{stem_e}ing"));
    forms
}

fn verb_forms() -> &'static HashSet<String> {
    static FORMS: OnceLock<HashSet<String>> = OnceLock::new();
    FORMS.get_or_init(|| {
        let mut set: HashSet<String> = BASE_VERBS.iter().flat_map(|b| inflections(b)).collect();
        set.extend(IRREGULAR.iter().map(|s| s.to_string()));
        set
    })
}

pub fn is_verb(token: &str) -> bool {
    verb_forms().contains(token)
}

fn is_aux(token: &str) -> bool {
    AUXILIARIES.contains(&token)
}

fn is_prep(token: &str) -> bool {
    PREPOSITIONS.contains(&token)
}

/// Extract at most one tuple from a sentence.
pub fn extract_sentence(text: &str, sid: u32) -> Option<Tuple> {
    let toks = tokenize(text);
    if toks.len() < 3 || WH_WORDS.contains(&toks[0].as_str()) {
        return None;
    }
    // Predicate starts at the first verb or auxiliary after a non-empty subject.
    let start = (1..toks.len()).find(|&i| is_verb(&toks[i]) || is_aux(&toks[i]))?;
    let subject = toks[..start].to_vec();
    if subject.len() > 8 {
        return None;
    }
    let mut end = start;
    while end < toks.len() && is_aux(&toks[end]) {
        end += 1;
    }
    if end < toks.len() && is_verb(&toks[end]) {
        end += 1;
    }
    // One preposition directly after the verb belongs to the predicate.
    if end < toks.len() && is_prep(&toks[end]) {
        end += 1;
    }
    let predicate = toks[start..end].to_vec();
    if predicate.is_empty() || end >= toks.len() {
        return None;
    }
    let mut objects: Vec<Vec<String>> = Vec::new();
    let mut current: Vec<String> = Vec::new();
    for t in &toks[end..] {
        if is_prep(t) && !current.is_empty() {
            objects.push(std::mem::take(&mut current));
        }
        current.push(t.clone());
    }
    if !current.is_empty() {
        objects.push(current);
    }
    if objects.is_empty() || objects.iter().any(|o| o.iter().all(|t| is_prep(t))) {
        return None;
    }
    Some(Tuple { subject, predicate, objects, sid })
}

/// One tuple per matching corpus line; sids count non-blank lines, matching
/// [`crate::index::SentenceIndex`].
pub fn extract_tuples<I, S>(corpus: I) -> Vec<Tuple>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    corpus
        .into_iter()
        .filter(|l| !l.as_ref().trim().is_empty())
        .enumerate()
        .filter_map(|(sid, l)| extract_sentence(l.as_ref(), sid as u32))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strs(v: &[Vec<String>]) -> Vec<String> {
        v.iter().map(|o| o.join(" ")).collect()
    }

    #[test]
    fn simple_transitive() {
        let t = extract_sentence("Magnets attract iron.", 0).unwrap();
        assert_eq!(t.subject, ["magnets"]);
        assert_eq!(t.predicate, ["attract"]);
        assert_eq!(strs(&t.objects), ["iron"]);
    }

    #[test]
    fn particle_joins_predicate() {
        let t = extract_sentence("A seed grows into a plant.", 4).unwrap();
        assert_eq!(t.subject, ["a", "seed"]);
        assert_eq!(t.predicate, ["grows", "into"]);
        assert_eq!(strs(&t.objects), ["a plant"]);
        assert_eq!(t.sid, 4);
    }

    #[test]
    fn trailing_prepositional_phrases() {
        let t = extract_sentence("Water boils at high heat in a kettle.", 0).unwrap();
        assert_eq!(t.predicate, ["boils", "at"]);
        assert_eq!(strs(&t.objects), ["high heat", "in a kettle"]);
        let t = extract_sentence("The sun heats the water in the ocean.", 0).unwrap();
        assert_eq!(t.subject, ["the", "sun"]);
        assert_eq!(t.predicate, ["heats"]);
        assert_eq!(strs(&t.objects), ["the water", "in the ocean"]);
    }

    #[test]
    fn auxiliaries_and_copula() {
        let t = extract_sentence("Iron is a metal.", 0).unwrap();
        assert_eq!((t.subject.join(" "), t.predicate.join(" ")), ("iron".into(), "is".into()));
        assert_eq!(strs(&t.objects), ["a metal"]);
        let t = extract_sentence("Salt can dissolve in water.", 0).unwrap();
        assert_eq!(t.predicate.join(" "), "can dissolve in");
        assert_eq!(strs(&t.objects), ["water"]);
    }

    #[test]
    fn non_matching_sentences() {
        assert!(extract_sentence("Wow.", 0).is_none());
        assert!(extract_sentence("Which metal attracts iron?", 0).is_none());
        assert!(extract_sentence("Bright red flowers everywhere", 0).is_none());
        assert!(extract_sentence("Plants grow.", 0).is_none());
    }

    #[test]
    fn sids_follow_non_blank_lines() {
        let tuples = extract_tuples(["Wow.", "", "Magnets attract iron."]);
        assert_eq!(tuples.len(), 1);
        assert_eq!(tuples[0].sid, 1);
    }

    #[test]
    fn tsv_round_trip() {
        let t = extract_sentence("The sun heats the water in the ocean.", 9).unwrap();
        assert_eq!(Tuple::from_tsv(&t.to_tsv()).unwrap(), t);
        assert!(Tuple::from_tsv("a\tb\t3").is_err());
    }

    #[test]
    fn inflection_table() {
        for form in ["attracts", "attracted", "carries", "carried", "produces", "melting", "grew", "contains"] {
            assert!(is_verb(form), "{form}");
        }
        assert!(!is_verb("magnets"));
        let t = extract_sentence("Ice needs heat.", 0).unwrap();
        assert_eq!(strs(&t.objects), ["heat"]);
    }
}
