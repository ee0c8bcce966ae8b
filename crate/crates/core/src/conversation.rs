//! Per-session conversation state over a story's pruned P/Q graph.
//!
//! Reading a paragraph answers every question adjacent to it. A paragraph
//! whose neighbors are all answered is uninformative: showing it would not
//! answer anything new.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::corpus::Corpus;
use crate::pq_graph::PQGraph;
use crate::providers::{ProviderError, QaVerdict, QuestionAnswerer};

#[derive(Debug, thiserror::Error)]
pub enum ConversationError {
    #[error("story `{0}` has no pruned graph yet; run build-bank and build-graph first")]
    NotReady(String),
    #[error("paragraph `{0}` does not belong to this story")]
    ForeignParagraph(String),
    #[error("answer unavailable: {0}")]
    AnswerUnavailable(ProviderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Recommended,
    FreeForm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AskedQuestion {
    pub text: String,
    pub timestamp: DateTime<Utc>,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversationState {
    pub session_id: String,
    pub story_id: String,
    pub read_paragraphs: BTreeSet<String>,
    pub answered_questions: BTreeSet<String>,
    pub shown_events: BTreeSet<String>,
    pub asked_questions: Vec<AskedQuestion>,
}

/// The paragraph chosen to answer a question.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerChoice {
    pub paragraph_id: String,
    pub verdict: QaVerdict,
    /// Every confident paragraph was uninformative; this one repeats content.
    pub repeat: bool,
}

/// Blank state for a story. The graph must exist and be pruned.
pub fn new_state(session_id: &str, story_id: &str, graph: Option<&PQGraph>) -> Result<ConversationState, ConversationError> {
    match graph {
        Some(g) if g.is_pruned() && g.story_id() == story_id => Ok(ConversationState {
            session_id: session_id.to_string(),
            story_id: story_id.to_string(),
            read_paragraphs: BTreeSet::new(),
            answered_questions: BTreeSet::new(),
            shown_events: BTreeSet::new(),
            asked_questions: Vec::new(),
        }),
        _ => Err(ConversationError::NotReady(story_id.to_string())),
    }
}

impl ConversationState {
    /// Grows with every newly read paragraph; keys the precomputed-answer cache.
    pub fn version(&self) -> usize {
        self.read_paragraphs.len()
    }

    fn check_paragraph(&self, graph: &PQGraph, paragraph_id: &str) -> Result<(), ConversationError> {
        if graph.contains_paragraph(paragraph_id) {
            Ok(())
        } else {
            Err(ConversationError::ForeignParagraph(paragraph_id.to_string()))
        }
    }

    /// Mark a paragraph read; returns the questions it newly answers.
    pub fn mark_read(&mut self, graph: &PQGraph, paragraph_id: &str) -> Result<BTreeSet<String>, ConversationError> {
        self.check_paragraph(graph, paragraph_id)?;
        self.read_paragraphs.insert(paragraph_id.to_string());
        let mut newly = BTreeSet::new();
        for q in graph.paragraph_neighbors(paragraph_id) {
            if self.answered_questions.insert(q.clone()) {
                newly.insert(q.clone());
            }
        }
        Ok(newly)
    }

    fn unanswered_neighbors(&self, graph: &PQGraph, paragraph_id: &str) -> usize {
        graph
            .paragraph_neighbors(paragraph_id)
            .filter(|q| !self.answered_questions.contains(*q))
            .count()
    }

    /// True iff every neighbor of the paragraph is answered (vacuously true
    /// for paragraphs without edges).
    pub fn is_uninformative(&self, graph: &PQGraph, paragraph_id: &str) -> Result<bool, ConversationError> {
        self.check_paragraph(graph, paragraph_id)?;
        Ok(self.unanswered_neighbors(graph, paragraph_id) == 0)
    }

    pub fn uninformative_paragraphs<'g>(&self, graph: &'g PQGraph) -> BTreeSet<&'g String> {
        graph
            .paragraph_ids()
            .iter()
            .filter(|p| self.unanswered_neighbors(graph, p) == 0)
            .collect()
    }

    /// Pick the paragraph to answer `question` with.
    ///
    /// Among paragraphs the reader is confident about, informative ones win,
    /// ranked by unanswered neighbors, then confidence, then id. When every
    /// confident paragraph is uninformative the most confident one is
    /// returned with `repeat` set.
    pub fn select_answer_paragraph(
        &self,
        graph: &PQGraph,
        corpus: &Corpus,
        question: &str,
        reader: &dyn QuestionAnswerer,
        cfg: &EngineConfig,
    ) -> Result<Option<AnswerChoice>, ConversationError> {
        let mut confident: Vec<(&String, QaVerdict, usize)> = Vec::new();
        let mut failures = 0usize;
        let mut last_error = None;
        let mut asked = 0usize;
        for pid in graph.paragraph_ids() {
            let Some(paragraph) = corpus.paragraph(pid) else {
                return Err(ConversationError::ForeignParagraph(pid.clone()));
            };
            asked += 1;
            match reader.answer_question(question, paragraph) {
                Ok(v) if v.confidence >= cfg.qa_threshold && v.answer_span.is_some() => {
                    confident.push((pid, v, self.unanswered_neighbors(graph, pid)));
                }
                Ok(_) => {}
                Err(e) => {
                    failures += 1;
                    last_error = Some(e);
                }
            }
        }
        if asked > 0 && failures == asked {
            return Err(ConversationError::AnswerUnavailable(
                last_error.unwrap_or(ProviderError::Transport("no reader response".into())),
            ));
        }

        let best_informative = confident
            .iter()
            .filter(|(_, _, unanswered)| *unanswered > 0)
            .max_by(|a, b| {
                a.2.cmp(&b.2)
                    .then_with(|| a.1.confidence.total_cmp(&b.1.confidence))
                    .then_with(|| b.0.cmp(a.0))
            });
        if let Some((pid, v, _)) = best_informative {
            return Ok(Some(AnswerChoice {
                paragraph_id: (*pid).clone(),
                verdict: *v,
                repeat: false,
            }));
        }
        Ok(confident
            .iter()
            .max_by(|a, b| a.1.confidence.total_cmp(&b.1.confidence).then_with(|| b.0.cmp(a.0)))
            .map(|(pid, v, _)| AnswerChoice {
                paragraph_id: (*pid).clone(),
                verdict: *v,
                repeat: true,
            }))
    }

    /// Unanswered covering questions by unread-neighbor count, then
    /// importance (degree), then id; at most `recommend_n`.
    pub fn recommend(&self, graph: &PQGraph, cfg: &EngineConfig) -> Vec<String> {
        let mut ranked: Vec<(usize, usize, &String)> = graph
            .question_ids()
            .filter(|q| !self.answered_questions.contains(*q))
            .map(|q| {
                let unread = graph
                    .question_neighbors(q)
                    .filter(|p| !self.read_paragraphs.contains(*p))
                    .count();
                let importance = graph.question_importance(q).unwrap_or(0);
                (unread, importance, q)
            })
            .collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| b.1.cmp(&a.1)).then_with(|| a.2.cmp(b.2)));
        ranked.into_iter().take(cfg.recommend_n).map(|(_, _, q)| q.clone()).collect()
    }

    /// Answer the current recommendations ahead of time.
    pub fn precompute_answers(
        &self,
        graph: &PQGraph,
        corpus: &Corpus,
        reader: &dyn QuestionAnswerer,
        cfg: &EngineConfig,
    ) -> PrecomputedAnswers {
        let mut entries = BTreeMap::new();
        for qid in self.recommend(graph, cfg) {
            let Some(node) = graph.question(&qid) else { continue };
            match self.select_answer_paragraph(graph, corpus, &node.text, reader, cfg) {
                Ok(choice) => {
                    entries.insert(qid, choice);
                }
                Err(e) => tracing::warn!(question = %qid, error = %e, "precompute failed; will answer live"),
            }
        }
        PrecomputedAnswers {
            version: self.version(),
            entries,
        }
    }
}

/// Answers to recommended questions, valid for one read-set version.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrecomputedAnswers {
    pub version: usize,
    /// `None` records that no paragraph cleared the threshold.
    pub entries: BTreeMap<String, Option<AnswerChoice>>,
}

impl PrecomputedAnswers {
    /// Cached answer for `question_id`, if computed for the state's current version.
    pub fn get(&self, state: &ConversationState, question_id: &str) -> Option<&Option<AnswerChoice>> {
        if self.version != state.version() {
            return None;
        }
        self.entries.get(question_id)
    }

    pub fn is_valid_for(&self, state: &ConversationState) -> bool {
        self.version == state.version()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pq_graph::{Edge, QuestionNode};

    /// p1 -> {q1, q2}, p2 -> {q2, q3}, p3 -> {q3}, p4 isolated.
    fn fixture() -> PQGraph {
        let q = |id: &str| QuestionNode {
            id: id.into(),
            text: id.into(),
            source_paragraph_id: "p1".into(),
            score: 1.0,
        };
        let e = |p: &str, q: &str| Edge {
            paragraph_id: p.into(),
            question_id: q.into(),
            confidence: 1.0,
        };
        let full = PQGraph::new(
            "s",
            0.5,
            ["p1", "p2", "p3", "p4"].map(String::from).to_vec(),
            vec![q("q1"), q("q2"), q("q3")],
            vec![e("p1", "q1"), e("p1", "q2"), e("p2", "q2"), e("p2", "q3"), e("p3", "q3")],
        )
        .unwrap();
        full.prune(&["q1".into(), "q2".into(), "q3".into()]).unwrap()
    }

    #[test]
    fn blank_state_requires_pruned_graph() {
        let g = fixture();
        let s = new_state("x", "s", Some(&g)).unwrap();
        assert!(s.read_paragraphs.is_empty() && s.answered_questions.is_empty());
        assert!(matches!(new_state("x", "s", None), Err(ConversationError::NotReady(_))));
        let unpruned = PQGraph::new("s", 0.5, vec![], vec![], vec![]).unwrap();
        assert!(new_state("x", "s", Some(&unpruned)).is_err());
        assert!(new_state("x", "other", Some(&g)).is_err());
    }

    #[test]
    fn blank_state_uninformative_is_edgeless_paragraphs() {
        let g = fixture();
        let s = new_state("x", "s", Some(&g)).unwrap();
        let un: Vec<&String> = s.uninformative_paragraphs(&g).into_iter().collect();
        assert_eq!(un, ["p4"]);
        assert!(!s.is_uninformative(&g, "p1").unwrap());
    }

    #[test]
    fn mark_read_answers_neighbors_idempotently() {
        let g = fixture();
        let mut s = new_state("x", "s", Some(&g)).unwrap();
        let newly = s.mark_read(&g, "p1").unwrap();
        assert_eq!(newly, BTreeSet::from(["q1".to_string(), "q2".to_string()]));
        assert!(s.mark_read(&g, "p1").unwrap().is_empty());
        assert!(s.mark_read(&g, "p4").unwrap().is_empty());
        assert!(matches!(s.mark_read(&g, "elsewhere"), Err(ConversationError::ForeignParagraph(_))));
        assert!(s.is_uninformative(&g, "elsewhere").is_err());
    }

    #[test]
    fn uninformative_definition() {
        let g = fixture();
        let mut s = new_state("x", "s", Some(&g)).unwrap();
        s.mark_read(&g, "p1").unwrap();
        // p2 still has q3 unanswered
        assert!(!s.is_uninformative(&g, "p2").unwrap());
        s.mark_read(&g, "p3").unwrap();
        assert!(s.is_uninformative(&g, "p2").unwrap());
        assert!(s.is_uninformative(&g, "p4").unwrap());
    }

    #[test]
    fn recommend_orders_by_unread_then_importance_then_id() {
        let g = fixture();
        let cfg = EngineConfig::default();
        let mut s = new_state("x", "s", Some(&g)).unwrap();
        // unread degrees: q1=1, q2=2, q3=2
        assert_eq!(s.recommend(&g, &cfg), ["q2", "q3", "q1"]);
        s.mark_read(&g, "p3").unwrap();
        assert_eq!(s.recommend(&g, &cfg), ["q2", "q1"]);
        s.mark_read(&g, "p1").unwrap();
        assert!(s.recommend(&g, &cfg).is_empty());
        let two = EngineConfig {
            recommend_n: 2,
            ..Default::default()
        };
        let fresh = new_state("y", "s", Some(&g)).unwrap();
        assert_eq!(fresh.recommend(&g, &two), ["q2", "q3"]);
    }

    #[test]
    fn cache_is_versioned_by_read_set() {
        let g = fixture();
        let mut s = new_state("x", "s", Some(&g)).unwrap();
        let cache = PrecomputedAnswers {
            version: s.version(),
            entries: BTreeMap::from([("q1".to_string(), None)]),
        };
        assert!(cache.get(&s, "q1").is_some());
        s.mark_read(&g, "p3").unwrap();
        assert!(cache.get(&s, "q1").is_none());
        assert!(!cache.is_valid_for(&s));
    }
}
