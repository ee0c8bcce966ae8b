#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use newschat_core::chat::ChatEngine;
use newschat_core::config::{ChatConfig, EngineConfig};
use newschat_core::corpus::{parse_corpus, Corpus};
use newschat_core::pq_graph::{build_graph, StoryGraph};
use newschat_core::providers::Providers;
use newschat_core::question_bank::build_question_bank;
use newschat_core::store::MemoryStore;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture_corpus() -> Arc<Corpus> {
    let text = std::fs::read_to_string(fixture("corpus.jsonl")).unwrap();
    let (records, _) = parse_corpus(text.as_bytes(), None).unwrap();
    Arc::new(Corpus::from_records(&records).unwrap())
}

pub fn story_graphs(corpus: &Corpus, providers: &Providers, cfg: &EngineConfig) -> BTreeMap<String, StoryGraph> {
    corpus
        .stories()
        .map(|s| {
            let bank = build_question_bank(corpus, &s.id, providers.questions.as_ref(), cfg).unwrap();
            let full = build_graph(corpus, &s.id, &bank.questions, providers.answers.as_ref(), cfg).unwrap();
            (s.id.clone(), StoryGraph::from_full(full).unwrap())
        })
        .collect()
}

/// Engine over the fixture corpus; graphs are built with the reference
/// providers, `serving` answers at chat time.
pub fn engine_with(serving: Providers, skip: &[&str]) -> ChatEngine {
    let corpus = fixture_corpus();
    let cfg = EngineConfig::default();
    let graphs = story_graphs(&corpus, &Providers::reference(), &cfg)
        .into_iter()
        .filter(|(id, _)| !skip.contains(&id.as_str()))
        .map(|(id, g)| (id, g.pruned))
        .collect();
    ChatEngine::new(corpus, graphs, serving, cfg, ChatConfig::default(), Arc::new(MemoryStore::new()))
}

pub fn engine() -> ChatEngine {
    engine_with(Providers::reference(), &[])
}
