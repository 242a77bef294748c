//! Tokenization, stopwords and stemming shared by every solver.

use std::sync::OnceLock;

use rust_stemmers::{Algorithm, Stemmer};

/// Fixed stopword list. Applied to queries and content-word extraction,
/// never to the index itself.
pub const STOPWORDS: &[&str] = &[
    "a",
    "about",
    "after",
    "all",
    "also",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "been",
    "being",
    "best",
    "but",
    "by",
    "can",
    "could",
    "did",
    "do",
    "does",
    "each",
    "following",
    "for",
    "from",
    "had",
    "has",
    "have",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "likely",
    "may",
    "might",
    "most",
    "of",
    "on",
    "or",
    "other",
    "should",
    "so",
    "some",
    "such",
    "than",
    "that",
    "the",
    "their",
    "them",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "to",
    "was",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "why",
    "will",
    "with",
    "would",
    "you",
    "your",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Lowercased alphanumeric word tokens; everything else is a separator.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(|t| t.to_lowercase()).collect()
}

/// Tokens with stopwords removed.
pub fn content_tokens(text: &str) -> Vec<String> {
    tokenize(text).into_iter().filter(|t| !is_stopword(t)).collect()
}

fn stemmer() -> &'static Stemmer {
    static STEMMER: OnceLock<Stemmer> = OnceLock::new();
    STEMMER.get_or_init(|| Stemmer::create(Algorithm::English))
}

/// Snowball English stem of an already-lowercased token.
pub fn stem(token: &str) -> String {
    stemmer().stem(token).into_owned()
}

/// Stemmed content words, deduplicated, first-occurrence order.
pub fn stemmed_content_words(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for tok in content_tokens(text) {
        let s = stem(&tok);
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stopword_list_is_sorted() {
        let mut sorted = STOPWORDS.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted, STOPWORDS);
    }

    #[test]
    fn tokenize_strips_punctuation_and_lowercases() {
        assert_eq!(tokenize("Particles move rapidly."), vec!["particles", "move", "rapidly"]);
        assert_eq!(tokenize("light-years, (Earth)!"), vec!["light", "years", "earth"]);
        assert!(tokenize("  ...  ").is_empty());
    }

    #[test]
    fn unicode_words_survive() {
        assert_eq!(tokenize("Über Ångström"), vec!["über", "ångström"]);
    }

    #[test]
    fn stems_collapse_inflections() {
        assert_eq!(stem("melts"), stem("melting"));
        assert_eq!(stemmed_content_words("The magnets attract the magnet"), vec!["magnet", "attract"]);
    }
}
