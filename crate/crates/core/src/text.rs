//! Tokenization helpers shared by the reference providers and the question bank.
//!
//! All offsets exposed by this crate are character offsets (Unicode scalar
//! values), not byte offsets.

use std::collections::{BTreeSet, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

const STOPWORDS_RAW: &str = include_str!("../data/stopwords.txt");

/// Half-open `[start, end)` range of character offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(usize, usize)", into = "(usize, usize)")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }
}

impl From<(usize, usize)> for Span {
    fn from((start, end): (usize, usize)) -> Self {
        Self { start, end }
    }
}

impl From<Span> for (usize, usize) {
    fn from(s: Span) -> Self {
        (s.start, s.end)
    }
}

pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Byte index of the `idx`-th character, clamped to the end of the string.
pub fn char_to_byte(text: &str, idx: usize) -> usize {
    text.char_indices()
        .nth(idx)
        .map(|(b, _)| b)
        .unwrap_or(text.len())
}

/// Slice `text` by character offsets. Out-of-range offsets are clamped.
pub fn slice_chars(text: &str, span: Span) -> &str {
    let start = char_to_byte(text, span.start);
    let end = char_to_byte(text, span.end.max(span.start));
    &text[start..end]
}

/// The shipped stopword list (lowercase).
pub fn stopwords() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| parse_word_list(STOPWORDS_RAW).collect())
}

pub fn is_stopword(token: &str) -> bool {
    stopwords().contains(token)
}

pub(crate) fn parse_word_list(raw: &str) -> impl Iterator<Item = &str> {
    raw.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}

/// Whitespace-delimited words with leading/trailing punctuation stripped,
/// lowercased. Punctuation-only tokens are dropped.
pub fn words_lower(text: &str) -> Vec<String> {
    surface_words(text)
        .into_iter()
        .map(|w| w.to_lowercase())
        .collect()
}

/// Whitespace-delimited words with surrounding punctuation stripped, case kept.
pub fn surface_words(text: &str) -> Vec<&str> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
        .collect()
}

/// Lowercased alphanumeric runs.
pub fn alnum_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Distinct lowercased, stopword-filtered tokens.
pub fn content_tokens(text: &str) -> BTreeSet<String> {
    alnum_tokens(text).filter(|t| !is_stopword(t)).collect()
}
