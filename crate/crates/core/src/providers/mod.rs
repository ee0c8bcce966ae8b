//! Contracts for the four model-backed capabilities.
//!
//! Every capability has a deterministic reference implementation in
//! [`reference`] and a JSON-over-HTTP client in [`remote`]. The engine only
//! ever sees the traits, so a real question-generation or reading-comprehension
//! server can be attached through configuration alone.

pub mod instrument;
pub mod reference;
pub mod remote;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::Paragraph;
use crate::text::Span;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ProviderError {
    #[error("provider unreachable: {0}")]
    Transport(String),
    #[error("provider timed out")]
    Timeout,
    #[error("invalid provider response: {0}")]
    InvalidResponse(String),
}

/// One beam-search candidate for a paragraph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedQuestion {
    pub text: String,
    /// In (0, 1]; non-increasing with beam rank.
    pub score: f64,
    pub paragraph_id: String,
}

/// Whether (and where) a paragraph answers a question.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QaVerdict {
    pub confidence: f64,
    /// Present iff `confidence > 0`.
    pub answer_span: Option<Span>,
}

impl QaVerdict {
    pub fn unanswerable() -> Self {
        Self {
            confidence: 0.0,
            answer_span: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Person,
    Org,
    Place,
    Acronym,
}

impl std::fmt::Display for EntityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EntityKind::Person => "person",
            EntityKind::Org => "org",
            EntityKind::Place => "place",
            EntityKind::Acronym => "acronym",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geo {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityCard {
    pub name: String,
    /// At most two paragraph blocks separated by a blank line.
    pub summary: String,
    /// Only set for places.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<Geo>,
}

pub trait QuestionGenerator: Send + Sync {
    /// Up to `k` candidates, best first.
    fn generate_questions(&self, paragraph: &Paragraph, k: usize) -> Result<Vec<GeneratedQuestion>, ProviderError>;
}

pub trait QuestionAnswerer: Send + Sync {
    fn answer_question(&self, question: &str, paragraph: &Paragraph) -> Result<QaVerdict, ProviderError>;
}

pub trait EventSummarizer: Send + Sync {
    fn summarize_event(&self, headline_pool: &[String]) -> Result<String, ProviderError>;
}

pub trait EntityLookup: Send + Sync {
    fn lookup_entity(&self, surface: &str, kind: EntityKind) -> Result<Option<EntityCard>, ProviderError>;
}

impl<T: QuestionGenerator + ?Sized> QuestionGenerator for Arc<T> {
    fn generate_questions(&self, paragraph: &Paragraph, k: usize) -> Result<Vec<GeneratedQuestion>, ProviderError> {
        (**self).generate_questions(paragraph, k)
    }
}

impl<T: QuestionAnswerer + ?Sized> QuestionAnswerer for Arc<T> {
    fn answer_question(&self, question: &str, paragraph: &Paragraph) -> Result<QaVerdict, ProviderError> {
        (**self).answer_question(question, paragraph)
    }
}

impl<T: EventSummarizer + ?Sized> EventSummarizer for Arc<T> {
    fn summarize_event(&self, headline_pool: &[String]) -> Result<String, ProviderError> {
        (**self).summarize_event(headline_pool)
    }
}

impl<T: EntityLookup + ?Sized> EntityLookup for Arc<T> {
    fn lookup_entity(&self, surface: &str, kind: EntityKind) -> Result<Option<EntityCard>, ProviderError> {
        (**self).lookup_entity(surface, kind)
    }
}

/// The full provider set used by the engine.
#[derive(Clone)]
pub struct Providers {
    pub questions: Arc<dyn QuestionGenerator>,
    pub answers: Arc<dyn QuestionAnswerer>,
    pub summarizer: Arc<dyn EventSummarizer>,
    pub entities: Arc<dyn EntityLookup>,
}

impl Providers {
    /// All four reference implementations with the bundled entity table.
    pub fn reference() -> Self {
        Self {
            questions: Arc::new(reference::TemplateQuestionGenerator),
            answers: Arc::new(reference::LexicalAnswerer),
            summarizer: Arc::new(reference::HeadlineSummarizer::default()),
            entities: Arc::new(reference::FixtureEntityLookup::bundled()),
        }
    }

    pub fn with_answers(mut self, answers: Arc<dyn QuestionAnswerer>) -> Self {
        self.answers = answers;
        self
    }

    pub fn with_questions(mut self, questions: Arc<dyn QuestionGenerator>) -> Self {
        self.questions = questions;
        self
    }

    pub fn with_entities(mut self, entities: Arc<dyn EntityLookup>) -> Self {
        self.entities = entities;
        self
    }

    pub fn with_summarizer(mut self, summarizer: Arc<dyn EventSummarizer>) -> Self {
        self.summarizer = summarizer;
        self
    }
}

impl std::fmt::Debug for Providers {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Providers").finish_non_exhaustive()
    }
}
