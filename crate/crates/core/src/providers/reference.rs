//! Deterministic, model-free provider implementations.

use std::collections::{BTreeSet, HashMap};

use serde::Deserialize;

use super::{
    EntityCard, EntityKind, EntityLookup, EventSummarizer, GeneratedQuestion, Geo, ProviderError, QaVerdict,
    QuestionAnswerer, QuestionGenerator,
};
use crate::corpus::{split_sentences, Paragraph};
use crate::text::{content_tokens, is_stopword, slice_chars, surface_words, Span};

const BUNDLED_ENTITIES: &str = include_str!("../../data/entities.json");

const SCALE_WORDS: &[&str] = &["hundred", "thousand", "million", "billion", "trillion", "percent", "per"];

const MONTHS: &[&str] = &[
    "january",
    "february",
    "march",
    "april",
    "may",
    "june",
    "july",
    "august",
    "september",
    "october",
    "november",
    "december",
];

const WEEKDAYS: &[&str] = &["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"];

fn is_date_word(word: &str) -> bool {
    let lower = word.to_lowercase();
    if MONTHS.contains(&lower.as_str()) || WEEKDAYS.contains(&lower.as_str()) {
        return true;
    }
    word.len() == 4 && word.chars().all(|c| c.is_ascii_digit()) && (word.starts_with("19") || word.starts_with("20"))
}

fn has_digit(word: &str) -> bool {
    word.chars().any(|c| c.is_ascii_digit())
}

fn is_capitalized(word: &str) -> bool {
    let mut chars = word.chars();
    matches!(chars.next(), Some(c) if c.is_uppercase()) && word.chars().all(|c| c.is_alphabetic() || c == '-' || c == '\'')
}

/// Template question generator.
///
/// For every sentence, in order, at most one question per matching template:
///
/// | template | fires when | form |
/// |---|---|---|
/// | number | a word holds a digit and is followed by a noun-like word | `How many <unit> are linked to <k1 k2 k3>?` |
/// | person | a capitalized run that does not open the sentence | `Who is <Name> in the context of <k1 k2>?` |
/// | date | a month, weekday or 19xx/20xx year | `When did <k1 k2 k3> happen?` |
/// | default | any sentence with a keyword | `What is said about <k1 k2 k3>?` |
///
/// Keywords `k*` are the sentence's content words in order. All template
/// filler words are stopwords, so a question's content tokens come from its
/// source sentence only. Candidate `i` (after exact-duplicate removal) scores
/// `1 / (1 + i)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct TemplateQuestionGenerator;

impl TemplateQuestionGenerator {
    fn sentence_questions(sentence: &str) -> Vec<String> {
        let words = surface_words(sentence);
        let mut keywords: Vec<String> = Vec::new();
        for w in &words {
            let lower = w.to_lowercase();
            if is_stopword(&lower) || has_digit(w) || SCALE_WORDS.contains(&lower.as_str()) {
                continue;
            }
            if !keywords.contains(&lower) {
                keywords.push(lower);
            }
        }
        let pick = |exclude: &[String], n: usize| -> Vec<String> {
            keywords.iter().filter(|k| !exclude.contains(k)).take(n).cloned().collect()
        };
        let mut out = Vec::new();

        if let Some(i) = words.iter().position(|w| has_digit(w)) {
            let unit = words[i + 1..]
                .iter()
                .map(|w| w.to_lowercase())
                .find(|w| !SCALE_WORDS.contains(&w.as_str()) && !has_digit(w));
            if let Some(unit) = unit.filter(|u| !is_stopword(u) && u.chars().all(char::is_alphabetic)) {
                let ctx = pick(std::slice::from_ref(&unit), 3);
                if !ctx.is_empty() {
                    out.push(format!("How many {unit} are linked to {}?", ctx.join(" ")));
                }
            }
        }

        let name_start = (1..words.len()).find(|&i| {
            is_capitalized(words[i]) && !is_date_word(words[i]) && !is_stopword(&words[i].to_lowercase())
        });
        if let Some(start) = name_start {
            let name: Vec<&str> = words[start..]
                .iter()
                .take_while(|w| is_capitalized(w) && !is_date_word(w))
                .take(3)
                .copied()
                .collect();
            let lowered: Vec<String> = name.iter().map(|w| w.to_lowercase()).collect();
            let ctx = pick(&lowered, 2);
            if !ctx.is_empty() {
                out.push(format!("Who is {} in the context of {}?", name.join(" "), ctx.join(" ")));
            }
        }

        if let Some(date) = words.iter().find(|w| is_date_word(w)) {
            let ctx = pick(&[date.to_lowercase()], 3);
            if ctx.len() >= 2 {
                out.push(format!("When did {} happen?", ctx.join(" ")));
            }
        }

        let ctx = pick(&[], 3);
        if !ctx.is_empty() {
            out.push(format!("What is said about {}?", ctx.join(" ")));
        }
        out
    }
}

impl QuestionGenerator for TemplateQuestionGenerator {
    fn generate_questions(&self, paragraph: &Paragraph, k: usize) -> Result<Vec<GeneratedQuestion>, ProviderError> {
        let spans = if paragraph.sentence_spans.is_empty() {
            split_sentences(&paragraph.text)
        } else {
            paragraph.sentence_spans.clone()
        };
        let mut seen = BTreeSet::new();
        let mut texts = Vec::new();
        for span in spans {
            for q in Self::sentence_questions(slice_chars(&paragraph.text, span)) {
                if seen.insert(q.clone()) {
                    texts.push(q);
                }
            }
        }
        Ok(texts
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(rank, text)| GeneratedQuestion {
                text,
                score: 1.0 / (1.0 + rank as f64),
                paragraph_id: paragraph.id.clone(),
            })
            .collect())
    }
}

/// Lexical-overlap reader.
///
/// `confidence = |content(question) ∩ content(paragraph)| / |content(question)|`
/// over distinct lowercased, stopword-filtered tokens. The answer span is the
/// sentence sharing the most question tokens, earliest on ties.
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalAnswerer;

impl QuestionAnswerer for LexicalAnswerer {
    fn answer_question(&self, question: &str, paragraph: &Paragraph) -> Result<QaVerdict, ProviderError> {
        let q = content_tokens(question);
        if q.is_empty() {
            return Ok(QaVerdict::unanswerable());
        }
        let spans = if paragraph.sentence_spans.is_empty() {
            split_sentences(&paragraph.text)
        } else {
            paragraph.sentence_spans.clone()
        };
        let mut shared_total: BTreeSet<&String> = BTreeSet::new();
        let mut best: Option<(usize, Span)> = None;
        for span in spans {
            let sentence = content_tokens(slice_chars(&paragraph.text, span));
            let shared: Vec<&String> = q.iter().filter(|t| sentence.contains(*t)).collect();
            if !shared.is_empty() && best.is_none_or(|(n, _)| shared.len() > n) {
                best = Some((shared.len(), span));
            }
            shared_total.extend(shared);
        }
        let confidence = shared_total.len() as f64 / q.len() as f64;
        Ok(match best {
            Some((_, span)) if confidence > 0.0 => QaVerdict {
                confidence,
                answer_span: Some(span),
            },
            _ => QaVerdict::unanswerable(),
        })
    }
}

/// Picks the longest headline (by words; ties to the lexicographically
/// smallest) and cuts it to `max_words`, appending an ellipsis when cut.
#[derive(Debug, Clone, Copy)]
pub struct HeadlineSummarizer {
    pub max_words: usize,
}

impl Default for HeadlineSummarizer {
    fn default() -> Self {
        Self { max_words: 30 }
    }
}

impl EventSummarizer for HeadlineSummarizer {
    fn summarize_event(&self, headline_pool: &[String]) -> Result<String, ProviderError> {
        let best = headline_pool
            .iter()
            .max_by(|a, b| {
                let (la, lb) = (a.split_whitespace().count(), b.split_whitespace().count());
                la.cmp(&lb).then_with(|| b.cmp(a))
            })
            .ok_or_else(|| ProviderError::InvalidResponse("empty headline pool".into()))?;
        let words: Vec<&str> = best.split_whitespace().collect();
        if words.len() <= self.max_words {
            Ok(best.trim().to_string())
        } else {
            Ok(format!("{}\u{2026}", words[..self.max_words].join(" ")))
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct FixtureEntry {
    name: String,
    kind: EntityKind,
    paragraphs: Vec<String>,
    #[serde(default)]
    geo: Option<Geo>,
}

/// Entity lookup over a local JSON table keyed by lowercase surface form.
///
/// ```json
/// { "nato": { "name": "NATO", "kind": "acronym", "paragraphs": ["...", "..."] },
///   "lebanon": { "name": "Lebanon", "kind": "place", "paragraphs": ["..."],
///                "geo": { "lat": 33.85, "lon": 35.86 } } }
/// ```
#[derive(Debug, Clone, Default)]
pub struct FixtureEntityLookup {
    entries: HashMap<String, FixtureEntry>,
}

impl FixtureEntityLookup {
    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        let raw: HashMap<String, FixtureEntry> = serde_json::from_str(json)?;
        let entries = raw.into_iter().map(|(k, v)| (k.trim().to_lowercase(), v)).collect();
        Ok(Self { entries })
    }

    /// The entity table shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_ENTITIES).expect("bundled entity table is valid JSON")
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl EntityLookup for FixtureEntityLookup {
    fn lookup_entity(&self, surface: &str, _kind: EntityKind) -> Result<Option<EntityCard>, ProviderError> {
        let key = surface.trim().trim_end_matches(['?', '.', '!']).trim().to_lowercase();
        Ok(self.entries.get(&key).map(|e| EntityCard {
            name: e.name.clone(),
            summary: e.paragraphs.iter().take(2).cloned().collect::<Vec<_>>().join("\n\n"),
            geo: if e.kind == EntityKind::Place { e.geo } else { None },
        }))
    }
}
