//! The story / event / article / paragraph hierarchy.
//!
//! Stories and events arrive pre-clustered: the corpus file carries
//! membership explicitly and ingest only validates and normalizes it.

mod ingest;
mod sentences;

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use ingest::{parse_corpus, parse_corpus_file, ArticleRecord, CorpusRecords, EventRecord, StoryRecord};
pub use sentences::{abbreviations, split_sentences};

use crate::text::Span;

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read corpus file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: field `{field}`: {message}")]
    Malformed {
        line: usize,
        field: String,
        message: String,
    },
    #[error("line {line}: {kind} `{id}` conflicts with an existing record of the same id")]
    Conflict { line: usize, kind: &'static str, id: String },
    #[error("{}{kind} `{id}` field `{field}` references unknown {target_kind} `{target}`", line_prefix(*.line))]
    DanglingReference {
        line: Option<usize>,
        kind: &'static str,
        id: String,
        field: &'static str,
        target_kind: &'static str,
        target: String,
    },
    #[error("{}{message}", line_prefix(*.line))]
    Invalid { line: Option<usize>, message: String },
}

fn line_prefix(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Story {
    pub id: String,
    pub name: String,
    /// Ordered by `occurred_at` ascending, ties by id.
    pub event_ids: Vec<String>,
    pub article_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub id: String,
    pub story_id: String,
    pub occurred_at: DateTime<Utc>,
    pub article_ids: Vec<String>,
    /// One headline per member article, aligned with `article_ids`.
    pub headline_pool: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub story_id: String,
    pub event_id: String,
    pub source: String,
    pub headline: String,
    pub published_at: DateTime<Utc>,
    pub paragraphs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub id: String,
    pub article_id: String,
    pub index: usize,
    pub text: String,
    pub sentence_spans: Vec<Span>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub stories: usize,
    pub events: usize,
    pub articles: usize,
    pub paragraphs: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StorySummary {
    pub id: String,
    pub name: String,
    pub latest_event_at: Option<DateTime<Utc>>,
    pub events: usize,
    pub articles: usize,
}

pub fn paragraph_id(article_id: &str, index: usize) -> String {
    format!("{article_id}/p{index}")
}

/// Validated, immutable corpus.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    stories: BTreeMap<String, Story>,
    events: BTreeMap<String, Event>,
    articles: BTreeMap<String, Article>,
    paragraphs: BTreeMap<String, Paragraph>,
}

impl Corpus {
    /// Build the hierarchy from raw records, checking every reference.
    pub fn from_records(records: &CorpusRecords) -> Result<Self, CorpusError> {
        let line = |kind: &str, id: &str| records.line_of(kind, id);
        let mut articles_by_event: BTreeMap<&str, Vec<&ArticleRecord>> = BTreeMap::new();
        for a in records.articles.values() {
            if !records.stories.contains_key(&a.story_id) {
                return Err(CorpusError::DanglingReference {
                    line: line("article", &a.id),
                    kind: "article",
                    id: a.id.clone(),
                    field: "story_id",
                    target_kind: "story",
                    target: a.story_id.clone(),
                });
            }
            let Some(event) = records.events.get(&a.event_id) else {
                return Err(CorpusError::DanglingReference {
                    line: line("article", &a.id),
                    kind: "article",
                    id: a.id.clone(),
                    field: "event_id",
                    target_kind: "event",
                    target: a.event_id.clone(),
                });
            };
            if event.story_id != a.story_id {
                return Err(CorpusError::Invalid {
                    line: line("article", &a.id),
                    message: format!(
                        "article `{}` belongs to story `{}` but its event `{}` belongs to story `{}`",
                        a.id, a.story_id, event.id, event.story_id
                    ),
                });
            }
            articles_by_event.entry(a.event_id.as_str()).or_default().push(a);
        }

        let mut events = BTreeMap::new();
        let mut events_by_story: BTreeMap<&str, Vec<&EventRecord>> = BTreeMap::new();
        for e in records.events.values() {
            if !records.stories.contains_key(&e.story_id) {
                return Err(CorpusError::DanglingReference {
                    line: line("event", &e.id),
                    kind: "event",
                    id: e.id.clone(),
                    field: "story_id",
                    target_kind: "story",
                    target: e.story_id.clone(),
                });
            }
            let mut members = articles_by_event.remove(e.id.as_str()).unwrap_or_default();
            if members.is_empty() {
                return Err(CorpusError::Invalid {
                    line: line("event", &e.id),
                    message: format!("event `{}` has no member articles", e.id),
                });
            }
            members.sort_by(|a, b| (a.published_at, &a.id).cmp(&(b.published_at, &b.id)));
            events.insert(
                e.id.clone(),
                Event {
                    id: e.id.clone(),
                    story_id: e.story_id.clone(),
                    occurred_at: e.occurred_at,
                    article_ids: members.iter().map(|a| a.id.clone()).collect(),
                    headline_pool: members.iter().map(|a| a.headline.clone()).collect(),
                },
            );
            events_by_story.entry(e.story_id.as_str()).or_default().push(e);
        }

        let mut stories = BTreeMap::new();
        for s in records.stories.values() {
            let mut evs = events_by_story.remove(s.id.as_str()).unwrap_or_default();
            evs.sort_by(|a, b| (a.occurred_at, &a.id).cmp(&(b.occurred_at, &b.id)));
            let event_ids: Vec<String> = evs.iter().map(|e| e.id.clone()).collect();
            let article_ids = event_ids
                .iter()
                .flat_map(|eid| events[eid].article_ids.iter().cloned())
                .collect();
            stories.insert(
                s.id.clone(),
                Story {
                    id: s.id.clone(),
                    name: s.name.clone(),
                    event_ids,
                    article_ids,
                },
            );
        }

        let mut articles = BTreeMap::new();
        let mut paragraphs = BTreeMap::new();
        for a in records.articles.values() {
            let mut pids = Vec::with_capacity(a.paragraphs.len());
            for (index, text) in a.paragraphs.iter().enumerate() {
                let id = paragraph_id(&a.id, index);
                paragraphs.insert(
                    id.clone(),
                    Paragraph {
                        id: id.clone(),
                        article_id: a.id.clone(),
                        index,
                        sentence_spans: split_sentences(text),
                        text: text.clone(),
                    },
                );
                pids.push(id);
            }
            articles.insert(
                a.id.clone(),
                Article {
                    id: a.id.clone(),
                    story_id: a.story_id.clone(),
                    event_id: a.event_id.clone(),
                    source: a.source.clone(),
                    headline: a.headline.clone(),
                    published_at: a.published_at,
                    paragraphs: pids,
                },
            );
        }

        let corpus = Corpus {
            stories,
            events,
            articles,
            paragraphs,
        };
        corpus.check_integrity()?;
        Ok(corpus)
    }

    /// Referential integrity and chronology over the built hierarchy.
    pub fn check_integrity(&self) -> Result<(), CorpusError> {
        let invalid = |message: String| Err(CorpusError::Invalid { line: None, message });
        for p in self.paragraphs.values() {
            match self.articles.get(&p.article_id) {
                Some(a) if a.paragraphs.get(p.index) == Some(&p.id) => {}
                _ => return invalid(format!("paragraph `{}` does not resolve to its article", p.id)),
            }
        }
        for a in self.articles.values() {
            match self.events.get(&a.event_id) {
                Some(e) if e.article_ids.contains(&a.id) && e.story_id == a.story_id => {}
                _ => return invalid(format!("article `{}` does not resolve to its event", a.id)),
            }
        }
        for story in self.stories.values() {
            let mut prev: Option<DateTime<Utc>> = None;
            for eid in &story.event_ids {
                let Some(e) = self.events.get(eid) else {
                    return invalid(format!("story `{}` lists unknown event `{eid}`", story.id));
                };
                if e.story_id != story.id {
                    return invalid(format!("event `{eid}` is listed by story `{}`", story.id));
                }
                if prev.is_some_and(|p| p > e.occurred_at) {
                    return invalid(format!("story `{}` events are not chronological", story.id));
                }
                prev = Some(e.occurred_at);
            }
        }
        Ok(())
    }

    pub fn summary(&self) -> CorpusSummary {
        CorpusSummary {
            stories: self.stories.len(),
            events: self.events.len(),
            articles: self.articles.len(),
            paragraphs: self.paragraphs.len(),
        }
    }

    pub fn story(&self, id: &str) -> Option<&Story> {
        self.stories.get(id)
    }

    pub fn event(&self, id: &str) -> Option<&Event> {
        self.events.get(id)
    }

    pub fn article(&self, id: &str) -> Option<&Article> {
        self.articles.get(id)
    }

    pub fn paragraph(&self, id: &str) -> Option<&Paragraph> {
        self.paragraphs.get(id)
    }

    pub fn stories(&self) -> impl Iterator<Item = &Story> {
        self.stories.values()
    }

    /// Paragraphs of a story in timeline order: event, then article, then position.
    pub fn story_paragraphs(&self, story_id: &str) -> Vec<&Paragraph> {
        let Some(story) = self.stories.get(story_id) else {
            return Vec::new();
        };
        story
            .article_ids
            .iter()
            .filter_map(|aid| self.articles.get(aid))
            .flat_map(|a| a.paragraphs.iter().filter_map(|pid| self.paragraphs.get(pid)))
            .collect()
    }

    /// Source publisher of the article a paragraph belongs to.
    pub fn paragraph_source(&self, paragraph_id: &str) -> Option<&str> {
        let p = self.paragraphs.get(paragraph_id)?;
        self.articles.get(&p.article_id).map(|a| a.source.as_str())
    }

    pub fn latest_event_at(&self, story_id: &str) -> Option<DateTime<Utc>> {
        let story = self.stories.get(story_id)?;
        story.event_ids.last().and_then(|e| self.events.get(e)).map(|e| e.occurred_at)
    }

    /// Stories by most recent event descending, ties by id ascending.
    /// Stories without events sort last.
    pub fn list_stories(&self) -> Vec<StorySummary> {
        let mut out: Vec<StorySummary> = self
            .stories
            .values()
            .map(|s| StorySummary {
                id: s.id.clone(),
                name: s.name.clone(),
                latest_event_at: self.latest_event_at(&s.id),
                events: s.event_ids.len(),
                articles: s.article_ids.len(),
            })
            .collect();
        out.sort_by(|a, b| b.latest_event_at.cmp(&a.latest_event_at).then_with(|| a.id.cmp(&b.id)));
        out
    }
}
