//! Rule-based sentence splitter: terminal punctuation plus an abbreviation allowlist.

use std::collections::HashSet;
use std::sync::OnceLock;

use crate::text::{parse_word_list, Span};

const ABBREVIATIONS_RAW: &str = include_str!("../../data/abbreviations.txt");

pub fn abbreviations() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| parse_word_list(ABBREVIATIONS_RAW).collect())
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '?' | '!')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

/// Split `text` into sentence spans (character offsets).
///
/// Spans cover every non-whitespace character exactly once, are ordered and
/// never include leading or trailing whitespace. Text without terminal
/// punctuation yields a single span.
pub fn split_sentences(text: &str) -> Vec<Span> {
    let chars: Vec<char> = text.chars().collect();
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if start.is_none() {
            if !c.is_whitespace() {
                start = Some(i);
            } else {
                i += 1;
                continue;
            }
        }
        if is_terminal(c) {
            let mut end = i + 1;
            while end < chars.len() && (is_terminal(chars[end]) || is_closer(chars[end])) {
                end += 1;
            }
            let at_break = end == chars.len() || chars[end].is_whitespace();
            let only_period = chars[i..end].iter().filter(|c| is_terminal(**c)).all(|c| *c == '.');
            if at_break && !(only_period && suppresses_break(&chars, i, end)) {
                spans.push(Span::new(start.take().unwrap_or(i), end));
            }
            i = end;
            continue;
        }
        i += 1;
    }
    if let Some(s) = start {
        let mut end = chars.len();
        while end > s && chars[end - 1].is_whitespace() {
            end -= 1;
        }
        if end > s {
            spans.push(Span::new(s, end));
        }
    }
    spans
}

/// A period after a known abbreviation never ends a sentence. After a
/// single-letter initial it does not either when a name seems to continue:
/// the next word is another initial or a capitalized word.
fn suppresses_break(chars: &[char], dot: usize, end: usize) -> bool {
    let mut s = dot;
    while s > 0 && !chars[s - 1].is_whitespace() {
        s -= 1;
    }
    let word: String = chars[s..dot]
        .iter()
        .skip_while(|c| !c.is_alphanumeric())
        .collect::<String>()
        .to_lowercase();
    if word.is_empty() {
        return false;
    }
    if abbreviations().contains(word.as_str()) {
        return true;
    }
    let mut letters = word.chars();
    let single = matches!((letters.next(), letters.next()), (Some(c), None) if c.is_alphabetic());
    single && continues_name(chars, end)
}

fn continues_name(chars: &[char], from: usize) -> bool {
    let next: Vec<char> = chars[from..]
        .iter()
        .skip_while(|c| c.is_whitespace())
        .take_while(|c| !c.is_whitespace())
        .copied()
        .collect();
    let letters: Vec<char> = next.iter().take_while(|c| c.is_alphabetic()).copied().collect();
    match letters.first() {
        Some(c) if c.is_uppercase() => letters.len() >= 2 || next.get(1) == Some(&'.'),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::slice_chars;

    fn pieces(text: &str) -> Vec<&str> {
        split_sentences(text).into_iter().map(|s| slice_chars(text, s)).collect()
    }

    #[test]
    fn terminal_punctuation() {
        assert_eq!(pieces("A. B? C!"), ["A.", "B?", "C!"]);
    }

    #[test]
    fn no_punctuation_is_one_span() {
        let t = "No terminal punctuation";
        assert_eq!(split_sentences(t), vec![Span::new(0, t.chars().count())]);
    }

    #[test]
    fn abbreviation_does_not_split() {
        assert!(abbreviations().contains("mr"));
        assert_eq!(pieces("Mr. Smith left."), ["Mr. Smith left."]);
        assert_eq!(pieces("The U.S. said no. Then it left."), ["The U.S. said no.", "Then it left."]);
        assert_eq!(pieces("J. K. Rowling wrote it. Yes."), ["J. K. Rowling wrote it.", "Yes."]);
        assert_eq!(pieces("George W. Bush spoke."), ["George W. Bush spoke."]);
        assert_eq!(pieces("Plan B. it failed."), ["Plan B.", "it failed."]);
    }

    #[test]
    fn closing_quotes_stay_with_sentence() {
        assert_eq!(pieces("He said \"stop.\" Then left."), ["He said \"stop.\"", "Then left."]);
    }

    #[test]
    fn decimals_and_ellipses() {
        assert_eq!(pieces("Costs rose 3.5 percent... Then fell."), ["Costs rose 3.5 percent...", "Then fell."]);
    }

    #[test]
    fn whitespace_is_excluded() {
        let t = "  One.   Two  ";
        assert_eq!(split_sentences(t), vec![Span::new(2, 6), Span::new(9, 12)]);
        assert!(split_sentences("   ").is_empty());
    }

    #[test]
    fn abbreviation_list_is_pinned() {
        assert!(ABBREVIATIONS_RAW.starts_with("# Abbreviation list, version 1."));
        assert_eq!(abbreviations().len(), 47);
    }
}
