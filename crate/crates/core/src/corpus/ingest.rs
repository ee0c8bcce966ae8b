//! Line-delimited JSON corpus parsing.
//!
//! Each line is one object tagged by `kind`:
//!
//! ```text
//! {"kind":"story","id":"s1","name":"Australia Fires"}
//! {"kind":"event","id":"e1","story_id":"s1","occurred_at":"2020-01-05T10:00:00Z"}
//! {"kind":"article","id":"a1","story_id":"s1","event_id":"e1","source":"bbc.co.uk",
//!  "headline":"...","published_at":"2020-01-05T09:00:00Z","paragraphs":["...","..."]}
//! ```
//!
//! Blank lines are skipped. Timestamps are RFC 3339 with any offset and are
//! normalized to UTC.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{CorpusError, CorpusSummary};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryRecord {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub id: String,
    pub story_id: String,
    pub occurred_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArticleRecord {
    pub id: String,
    pub story_id: String,
    pub event_id: String,
    pub source: String,
    pub headline: String,
    pub published_at: DateTime<Utc>,
    pub paragraphs: Vec<String>,
}

/// Normalized raw records; the persisted form of the corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecords {
    pub stories: BTreeMap<String, StoryRecord>,
    pub events: BTreeMap<String, EventRecord>,
    pub articles: BTreeMap<String, ArticleRecord>,
    #[serde(skip)]
    lines: LineIndex,
}

type LineMap = HashMap<(&'static str, String), usize>;

/// Source line of each record, for error reporting only; ignored by equality.
#[derive(Debug, Clone, Default)]
struct LineIndex(LineMap);

impl PartialEq for LineIndex {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for LineIndex {}

impl CorpusRecords {
    pub(super) fn line_of(&self, kind: &str, id: &str) -> Option<usize> {
        let kind: &'static str = match kind {
            "story" => "story",
            "event" => "event",
            _ => "article",
        };
        self.lines.0.get(&(kind, id.to_string())).copied()
    }

    /// Record counts (paragraphs counted inline in articles).
    pub fn summary(&self) -> CorpusSummary {
        CorpusSummary {
            stories: self.stories.len(),
            events: self.events.len(),
            articles: self.articles.len(),
            paragraphs: self.articles.values().map(|a| a.paragraphs.len()).sum(),
        }
    }
}

enum Record {
    Story(StoryRecord),
    Event(EventRecord),
    Article(ArticleRecord),
}

struct Fields<'a> {
    line: usize,
    obj: &'a Map<String, Value>,
}

impl Fields<'_> {
    fn err(&self, field: &str, message: impl Into<String>) -> CorpusError {
        CorpusError::Malformed {
            line: self.line,
            field: field.to_string(),
            message: message.into(),
        }
    }

    fn string(&self, field: &str) -> Result<String, CorpusError> {
        match self.obj.get(field) {
            None => Err(self.err(field, "missing")),
            Some(Value::String(s)) if s.trim().is_empty() => Err(self.err(field, "must not be empty")),
            Some(Value::String(s)) => Ok(s.trim().to_string()),
            Some(_) => Err(self.err(field, "expected a string")),
        }
    }

    fn timestamp(&self, field: &str) -> Result<DateTime<Utc>, CorpusError> {
        let raw = self.string(field)?;
        DateTime::parse_from_rfc3339(&raw)
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| self.err(field, format!("invalid RFC 3339 timestamp `{raw}`: {e}")))
    }

    fn paragraphs(&self, field: &str) -> Result<Vec<String>, CorpusError> {
        let Some(value) = self.obj.get(field) else {
            return Err(self.err(field, "missing"));
        };
        let Value::Array(items) = value else {
            return Err(self.err(field, "expected an array of strings"));
        };
        if items.is_empty() {
            return Err(self.err(field, "an article needs at least one paragraph"));
        }
        items
            .iter()
            .enumerate()
            .map(|(i, v)| match v {
                Value::String(s) if !s.trim().is_empty() => Ok(s.trim().to_string()),
                Value::String(_) => Err(self.err(&format!("{field}[{i}]"), "paragraph text is empty")),
                _ => Err(self.err(&format!("{field}[{i}]"), "expected a string")),
            })
            .collect()
    }
}

fn parse_line(line: usize, raw: &str) -> Result<Record, CorpusError> {
    let value: Value = serde_json::from_str(raw).map_err(|e| CorpusError::Malformed {
        line,
        field: "<record>".into(),
        message: format!("invalid JSON: {e}"),
    })?;
    let Value::Object(obj) = &value else {
        return Err(CorpusError::Malformed {
            line,
            field: "<record>".into(),
            message: "expected a JSON object".into(),
        });
    };
    let f = Fields { line, obj };
    match f.string("kind")?.as_str() {
        "story" => Ok(Record::Story(StoryRecord {
            id: f.string("id")?,
            name: f.string("name")?,
        })),
        "event" => Ok(Record::Event(EventRecord {
            id: f.string("id")?,
            story_id: f.string("story_id")?,
            occurred_at: f.timestamp("occurred_at")?,
        })),
        "article" => {
            let id = f.string("id")?;
            let paragraphs = f.paragraphs("paragraphs")?;
            Ok(Record::Article(ArticleRecord {
                story_id: f.string("story_id")?,
                event_id: f.string("event_id")?,
                source: f.string("source")?,
                headline: f.string("headline")?,
                published_at: f.timestamp("published_at")?,
                paragraphs,
                id,
            }))
        }
        other => Err(f.err("kind", format!("unknown kind `{other}`, expected story, event or article"))),
    }
}

fn merge<T: PartialEq>(
    map: &mut BTreeMap<String, T>,
    lines: &mut LineMap,
    kind: &'static str,
    id: String,
    record: T,
    line: usize,
) -> Result<(), CorpusError> {
    match map.get(&id) {
        Some(existing) if *existing != record => Err(CorpusError::Conflict { line, kind, id }),
        Some(_) => Ok(()),
        None => {
            lines.entry((kind, id.clone())).or_insert(line);
            map.insert(id, record);
            Ok(())
        }
    }
}

/// Parse a corpus stream, merging into `existing` records when given.
///
/// Returns the merged records and the counts of distinct records in the
/// stream itself. A repeated id is accepted only when the content is identical.
pub fn parse_corpus<R: BufRead>(
    reader: R,
    existing: Option<CorpusRecords>,
) -> Result<(CorpusRecords, CorpusSummary), CorpusError> {
    let mut records = existing.unwrap_or_default();
    let mut seen = CorpusRecords::default();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| CorpusError::Malformed {
            line: lineno,
            field: "<record>".into(),
            message: format!("unreadable line: {e}"),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_line(lineno, &line)? {
            Record::Story(r) => {
                merge(&mut seen.stories, &mut seen.lines.0, "story", r.id.clone(), r.clone(), lineno)?;
                merge(&mut records.stories, &mut records.lines.0, "story", r.id.clone(), r, lineno)?;
            }
            Record::Event(r) => {
                merge(&mut seen.events, &mut seen.lines.0, "event", r.id.clone(), r.clone(), lineno)?;
                merge(&mut records.events, &mut records.lines.0, "event", r.id.clone(), r, lineno)?;
            }
            Record::Article(r) => {
                merge(&mut seen.articles, &mut seen.lines.0, "article", r.id.clone(), r.clone(), lineno)?;
                merge(&mut records.articles, &mut records.lines.0, "article", r.id.clone(), r, lineno)?;
            }
        }
    }
    Ok((records, seen.summary()))
}

pub fn parse_corpus_file(
    path: &Path,
    existing: Option<CorpusRecords>,
) -> Result<(CorpusRecords, CorpusSummary), CorpusError> {
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(std::io::BufReader::new(file), existing)
}
