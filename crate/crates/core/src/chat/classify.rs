//! Utterance routing: clarification patterns, small talk, open questions.

use crate::config::ChatConfig;
use crate::providers::EntityKind;
use crate::text::is_stopword;

/// Longest surface accepted by a clarification pattern, in words.
pub const MAX_SURFACE_WORDS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Utterance {
    Clarification { kind: EntityKind, surface: String },
    OpenQuestion,
    SmallTalk,
}

fn normalize(text: &str) -> String {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric() && c != '\''))
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Case-insensitive `prefix` match on whole words; returns the rest.
fn strip_prefix_words<'a>(text: &'a str, prefix: &str) -> Option<&'a str> {
    let mut rest = text;
    for want in prefix.split_whitespace() {
        rest = rest.trim_start();
        let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
        if !rest[..end].eq_ignore_ascii_case(want) {
            return None;
        }
        rest = &rest[end..];
    }
    Some(rest)
}

fn strip_suffix_words<'a>(text: &'a str, suffix: &str) -> Option<&'a str> {
    let mut rest = text;
    for want in suffix.split_whitespace().rev() {
        rest = rest.trim_end();
        let start = rest.rfind(char::is_whitespace).map_or(0, |i| i + 1);
        if !rest[start..].eq_ignore_ascii_case(want) {
            return None;
        }
        rest = &rest[..start];
    }
    Some(rest)
}

/// Route a user utterance.
///
/// A clarification needs a surface of 1 to [`MAX_SURFACE_WORDS`] words that
/// does not start with a stopword, so "Who is the prime minister?" stays an
/// open question.
pub fn classify_utterance(text: &str, cfg: &ChatConfig) -> Utterance {
    let core = text.trim().trim_end_matches(|c: char| matches!(c, '?' | '!' | '.') || c.is_whitespace());
    for pattern in &cfg.clarification_patterns {
        let Some(rest) = strip_prefix_words(core, &pattern.prefix) else { continue };
        let Some(surface) = strip_suffix_words(rest, &pattern.suffix) else { continue };
        let surface = surface.trim();
        let words: Vec<&str> = surface.split_whitespace().collect();
        let first = words.first().map(|w| w.to_lowercase());
        if (1..=MAX_SURFACE_WORDS).contains(&words.len()) && !first.is_some_and(|w| is_stopword(&w)) {
            return Utterance::Clarification {
                kind: pattern.kind,
                surface: words.join(" "),
            };
        }
    }
    let norm = normalize(text);
    if cfg.small_talk.iter().any(|s| normalize(s) == norm) {
        return Utterance::SmallTalk;
    }
    Utterance::OpenQuestion
}
