//! Candidate question generation, length filtering and per-paragraph
//! near-duplicate removal.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::EngineConfig;
use crate::corpus::Corpus;
use crate::providers::QuestionGenerator;
use crate::text::words_lower;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Question {
    pub id: String,
    pub text: String,
    /// Lowercased words, punctuation stripped.
    pub tokens: Vec<String>,
    pub source_paragraph_id: String,
    pub score: f64,
}

impl Question {
    pub fn new(story_id: &str, text: &str, source_paragraph_id: &str, score: f64) -> Self {
        Self {
            id: question_id(story_id, text),
            text: text.to_string(),
            tokens: words_lower(text),
            source_paragraph_id: source_paragraph_id.to_string(),
            score,
        }
    }
}

/// Stable id: a hash of the story id and the question text.
pub fn question_id(story_id: &str, text: &str) -> String {
    let mut h = Sha256::new();
    h.update(story_id.as_bytes());
    h.update([0x1f]);
    h.update(text.as_bytes());
    let digest = h.finalize();
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    format!("q-{hex}")
}

/// Whitespace-delimited words after stripping the terminal `?`; tokens made
/// only of punctuation do not count.
pub fn word_count(text: &str) -> usize {
    words_lower(text).len()
}

pub fn length_filter(candidates: Vec<Question>, cfg: &EngineConfig) -> Vec<Question> {
    candidates
        .into_iter()
        .filter(|q| (cfg.min_words..=cfg.max_words).contains(&q.tokens.len()))
        .collect()
}

/// `max(|a \ b|, |b \ a|)` over token multisets.
pub fn lexical_distance(a: &Question, b: &Question) -> usize {
    token_distance(&a.tokens, &b.tokens)
}

pub fn token_distance(a: &[String], b: &[String]) -> usize {
    let mut counts: HashMap<&str, isize> = HashMap::new();
    for t in a {
        *counts.entry(t).or_default() += 1;
    }
    for t in b {
        *counts.entry(t).or_default() -= 1;
    }
    let only_a: isize = counts.values().filter(|c| **c > 0).sum();
    let only_b: isize = -counts.values().filter(|c| **c < 0).sum::<isize>();
    only_a.max(only_b) as usize
}

/// Greedy sweep over score-sorted candidates: keep a question only if it is
/// farther than `dup_word_delta` from everything kept so far.
pub fn dedup_questions(candidates: Vec<Question>, cfg: &EngineConfig) -> Vec<Question> {
    let mut kept: Vec<Question> = Vec::new();
    for q in candidates {
        if kept.iter().all(|k| lexical_distance(k, &q) > cfg.dup_word_delta) {
            kept.push(q);
        }
    }
    kept
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionBank {
    pub story_id: String,
    pub questions: Vec<Question>,
    /// Paragraphs whose generator call failed.
    #[serde(default)]
    pub skipped_paragraphs: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum BankError {
    #[error("unknown story `{0}`")]
    UnknownStory(String),
}

/// Generate, filter and deduplicate questions for every paragraph of a story.
///
/// Questions from different paragraphs are never compared here; identical
/// texts from two paragraphs yield two records sharing an id.
pub fn build_question_bank(
    corpus: &Corpus,
    story_id: &str,
    generator: &dyn QuestionGenerator,
    cfg: &EngineConfig,
) -> Result<QuestionBank, BankError> {
    if corpus.story(story_id).is_none() {
        return Err(BankError::UnknownStory(story_id.to_string()));
    }
    let mut questions = Vec::new();
    let mut skipped = Vec::new();
    for paragraph in corpus.story_paragraphs(story_id) {
        let generated = match generator.generate_questions(paragraph, cfg.k_beam) {
            Ok(g) => g,
            Err(e) => {
                tracing::warn!(paragraph = %paragraph.id, error = %e, "question generation failed; skipping paragraph");
                skipped.push(paragraph.id.clone());
                continue;
            }
        };
        let mut candidates: Vec<Question> = generated
            .iter()
            .take(cfg.k_beam)
            .map(|g| Question::new(story_id, &g.text, &paragraph.id, g.score))
            .collect();
        candidates = length_filter(candidates, cfg);
        // stable: equal scores keep provider order
        candidates.sort_by(|a, b| b.score.total_cmp(&a.score));
        questions.extend(dedup_questions(candidates, cfg));
    }
    Ok(QuestionBank {
        story_id: story_id.to_string(),
        questions,
        skipped_paragraphs: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(text: &str, score: f64) -> Question {
        Question::new("s", text, "p", score)
    }

    fn n_words(n: usize) -> String {
        let mut s = (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        s.push('?');
        s
    }

    #[test]
    fn word_counts() {
        assert_eq!(word_count("When did the fires start?"), 5);
        assert_eq!(word_count("Why?"), 1);
        assert_eq!(word_count(""), 0);
        assert_eq!(word_count("Is it - really - over ?"), 4);
    }

    #[test]
    fn length_bounds_inclusive() {
        let cfg = EngineConfig::default();
        let kept = length_filter(vec![q(&n_words(4), 1.0), q(&n_words(5), 1.0), q(&n_words(12), 1.0), q(&n_words(13), 1.0)], &cfg);
        let lens: Vec<usize> = kept.iter().map(|q| q.tokens.len()).collect();
        assert_eq!(lens, [5, 12]);
    }

    #[test]
    fn distances() {
        let a = q("when did the fires start", 1.0);
        assert_eq!(lexical_distance(&a, &a), 0);
        assert_eq!(lexical_distance(&a, &q("when did the fire start", 1.0)), 1);
        // {who, won} vs {how, many, died, in, the, floods}: 2 vs 6
        assert_eq!(lexical_distance(&q("who won", 1.0), &q("how many died in the floods", 1.0)), 6);
        // multiset: repeated tokens count
        assert_eq!(lexical_distance(&q("the the cat", 1.0), &q("the cat", 1.0)), 1);
    }

    #[test]
    fn dedup_close_pair_keeps_higher_score() {
        let cfg = EngineConfig::default();
        let kept = dedup_questions(
            vec![q("when did the fires start today", 0.9), q("when did the fire start today", 0.8)],
            &cfg,
        );
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].score, 0.9);
    }

    #[test]
    fn dedup_far_pair_keeps_both() {
        let cfg = EngineConfig::default();
        let kept = dedup_questions(vec![q("a b c d e", 0.9), q("a b x y z", 0.8)], &cfg);
        assert_eq!(kept.len(), 2);
    }

    #[test]
    fn dedup_chain_is_not_transitive() {
        // A~B at 2, B~C at 2, A-C at 4: sweep keeps A, drops B, keeps C.
        let a = q("a b c d e f", 0.9);
        let b = q("a b c d x y", 0.8);
        let c = q("a b x y z w", 0.7);
        assert_eq!(lexical_distance(&a, &b), 2);
        assert_eq!(lexical_distance(&b, &c), 2);
        assert_eq!(lexical_distance(&a, &c), 4);
        let kept = dedup_questions(vec![a.clone(), b, c.clone()], &EngineConfig::default());
        assert_eq!(kept, vec![a, c]);
    }

    #[test]
    fn ids_are_stable_and_story_scoped() {
        assert_eq!(question_id("s1", "Why?"), question_id("s1", "Why?"));
        assert_ne!(question_id("s1", "Why?"), question_id("s2", "Why?"));
        assert_eq!(question_id("s1", "Why?").len(), 18);
    }
}
