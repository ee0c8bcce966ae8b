//! Offline build steps over a document store: ingest, question bank, graph.

use std::path::Path;

use crate::config::EngineConfig;
use crate::corpus::{parse_corpus_file, Corpus, CorpusError, CorpusRecords, CorpusSummary};
use crate::pq_graph::{build_graph, GraphError, StoryGraph};
use crate::providers::{QuestionAnswerer, QuestionGenerator};
use crate::question_bank::{build_question_bank, BankError, QuestionBank};
use crate::store::{self, get_json, put_json, DocumentStore, StoreError};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Bank(#[from] BankError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("story `{0}` has no question bank; run build-bank first")]
    MissingBank(String),
}

pub fn load_records(store: &dyn DocumentStore) -> Result<Option<CorpusRecords>, StoreError> {
    get_json(store, store::CORPUS, store::CORPUS_KEY)
}

/// Validated corpus from the store; empty when nothing was ingested.
pub fn load_corpus(store: &dyn DocumentStore) -> Result<Corpus, PipelineError> {
    let records = load_records(store)?.unwrap_or_default();
    Ok(Corpus::from_records(&records)?)
}

/// Parse, merge with what is stored, validate and persist.
///
/// Nothing is written when validation fails. Re-ingesting an identical file
/// leaves the stored bytes unchanged.
pub fn ingest(store: &dyn DocumentStore, corpus_path: &Path) -> Result<CorpusSummary, PipelineError> {
    let existing = load_records(store)?;
    let (records, summary) = parse_corpus_file(corpus_path, existing)?;
    Corpus::from_records(&records)?;
    put_json(store, store::CORPUS, store::CORPUS_KEY, &records)?;
    Ok(summary)
}

pub fn build_bank(
    store: &dyn DocumentStore,
    corpus: &Corpus,
    story_id: &str,
    generator: &dyn QuestionGenerator,
    cfg: &EngineConfig,
) -> Result<QuestionBank, PipelineError> {
    let bank = build_question_bank(corpus, story_id, generator, cfg)?;
    put_json(store, store::BANKS, story_id, &bank)?;
    Ok(bank)
}

pub fn load_bank(store: &dyn DocumentStore, story_id: &str) -> Result<Option<QuestionBank>, StoreError> {
    get_json(store, store::BANKS, story_id)
}

/// Build the full graph from the stored bank, cover it, and persist both stages.
pub fn build_story_graph(
    store: &dyn DocumentStore,
    corpus: &Corpus,
    story_id: &str,
    reader: &dyn QuestionAnswerer,
    cfg: &EngineConfig,
) -> Result<StoryGraph, PipelineError> {
    let bank = load_bank(store, story_id)?.ok_or_else(|| PipelineError::MissingBank(story_id.to_string()))?;
    let full = build_graph(corpus, story_id, &bank.questions, reader, cfg)?;
    let graph = StoryGraph::from_full(full)?;
    put_json(store, store::GRAPHS, story_id, &graph)?;
    Ok(graph)
}

pub fn load_graph(store: &dyn DocumentStore, story_id: &str) -> Result<Option<StoryGraph>, StoreError> {
    get_json(store, store::GRAPHS, story_id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::Providers;
    use crate::store::MemoryStore;
    use std::io::Write;

    const CORPUS: &str = r#"{"kind":"story","id":"s1","name":"Fires"}
{"kind":"event","id":"e1","story_id":"s1","occurred_at":"2020-01-05T10:00:00Z"}
{"kind":"article","id":"a1","story_id":"s1","event_id":"e1","source":"bbc.co.uk","headline":"Fires spread","published_at":"2020-01-05T09:00:00Z","paragraphs":["Fires have burned 10 million hectares across New South Wales since September.","Officials said 25 people have died in the fires since September."]}
"#;

    fn corpus_file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn ingest_is_idempotent_and_atomic() {
        let store = MemoryStore::new();
        let f = corpus_file(CORPUS);
        let summary = ingest(&store, f.path()).unwrap();
        assert_eq!((summary.stories, summary.events, summary.articles, summary.paragraphs), (1, 1, 1, 2));
        let first = store.get(store::CORPUS, store::CORPUS_KEY).unwrap().unwrap();
        ingest(&store, f.path()).unwrap();
        assert_eq!(store.get(store::CORPUS, store::CORPUS_KEY).unwrap().unwrap(), first);

        let bad = corpus_file(r#"{"kind":"article","id":"a9","story_id":"nope","event_id":"e1","source":"x","headline":"h","published_at":"2020-01-05T09:00:00Z","paragraphs":["p"]}"#);
        let err = ingest(&store, bad.path()).unwrap_err();
        assert!(err.to_string().contains("nope"), "{err}");
        assert_eq!(store.get(store::CORPUS, store::CORPUS_KEY).unwrap().unwrap(), first);
    }

    #[test]
    fn graph_needs_bank() {
        let store = MemoryStore::new();
        let f = corpus_file(CORPUS);
        ingest(&store, f.path()).unwrap();
        let corpus = load_corpus(&store).unwrap();
        let p = Providers::reference();
        let cfg = EngineConfig::default();
        assert!(matches!(
            build_story_graph(&store, &corpus, "s1", p.answers.as_ref(), &cfg),
            Err(PipelineError::MissingBank(_))
        ));
        let bank = build_bank(&store, &corpus, "s1", p.questions.as_ref(), &cfg).unwrap();
        assert!(!bank.questions.is_empty());
        let g = build_story_graph(&store, &corpus, "s1", p.answers.as_ref(), &cfg).unwrap();
        assert!(g.pruned.is_pruned());
        assert_eq!(load_graph(&store, "s1").unwrap(), Some(g));
        assert!(matches!(
            build_bank(&store, &corpus, "zz", p.questions.as_ref(), &cfg),
            Err(PipelineError::Bank(_))
        ));
    }
}
