//! The paragraph/question bipartite graph.
//!
//! An edge joins a paragraph and a question when the reader is at least
//! `qa_threshold` confident the paragraph answers the question. Questions are
//! then pruned to a greedy set cover of the answerable paragraphs.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::corpus::Corpus;
use crate::providers::QuestionAnswerer;
use crate::question_bank::Question;
use crate::text::content_tokens;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GraphError {
    #[error("unknown story `{0}`")]
    UnknownStory(String),
    #[error("question `{0}` is not in the graph")]
    UnknownQuestion(String),
    #[error("paragraph `{0}` is not in the graph")]
    UnknownParagraph(String),
    #[error("edge ({0}, {1}) references a node outside the graph")]
    DanglingEdge(String, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionNode {
    pub id: String,
    pub text: String,
    pub source_paragraph_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub paragraph_id: String,
    pub question_id: String,
    pub confidence: f64,
}

/// Serialized form: node lists, weighted edge list, and the cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct GraphDocument {
    story_id: String,
    qa_threshold: f64,
    paragraph_ids: Vec<String>,
    questions: Vec<QuestionNode>,
    edges: Vec<Edge>,
    pruned: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    covering_questions: Option<Vec<String>>,
    #[serde(default)]
    provider_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphDocument", into = "GraphDocument")]
pub struct PQGraph {
    story_id: String,
    qa_threshold: f64,
    paragraph_ids: Vec<String>,
    questions: BTreeMap<String, QuestionNode>,
    /// question -> paragraph -> confidence
    question_adj: BTreeMap<String, BTreeMap<String, f64>>,
    /// paragraph -> questions
    paragraph_adj: BTreeMap<String, BTreeSet<String>>,
    pruned: bool,
    covering_questions: Option<Vec<String>>,
    provider_failures: usize,
}

impl TryFrom<GraphDocument> for PQGraph {
    type Error = GraphError;

    fn try_from(doc: GraphDocument) -> Result<Self, GraphError> {
        let mut g = PQGraph::new(&doc.story_id, doc.qa_threshold, doc.paragraph_ids, doc.questions, doc.edges)?;
        g.pruned = doc.pruned;
        g.covering_questions = doc.covering_questions;
        g.provider_failures = doc.provider_failures;
        Ok(g)
    }
}

impl From<PQGraph> for GraphDocument {
    fn from(g: PQGraph) -> Self {
        let edges = g.edges();
        GraphDocument {
            story_id: g.story_id,
            qa_threshold: g.qa_threshold,
            paragraph_ids: g.paragraph_ids,
            questions: g.questions.into_values().collect(),
            edges,
            pruned: g.pruned,
            covering_questions: g.covering_questions,
            provider_failures: g.provider_failures,
        }
    }
}

impl PQGraph {
    /// Assemble an unpruned graph from explicit nodes and edges.
    pub fn new(
        story_id: &str,
        qa_threshold: f64,
        paragraph_ids: Vec<String>,
        questions: Vec<QuestionNode>,
        edges: Vec<Edge>,
    ) -> Result<Self, GraphError> {
        let questions: BTreeMap<String, QuestionNode> = questions.into_iter().map(|q| (q.id.clone(), q)).collect();
        let mut question_adj: BTreeMap<String, BTreeMap<String, f64>> =
            questions.keys().map(|q| (q.clone(), BTreeMap::new())).collect();
        let mut paragraph_adj: BTreeMap<String, BTreeSet<String>> =
            paragraph_ids.iter().map(|p| (p.clone(), BTreeSet::new())).collect();
        for e in edges {
            let (Some(qa), Some(pa)) = (question_adj.get_mut(&e.question_id), paragraph_adj.get_mut(&e.paragraph_id))
            else {
                return Err(GraphError::DanglingEdge(e.paragraph_id, e.question_id));
            };
            qa.insert(e.paragraph_id.clone(), e.confidence);
            pa.insert(e.question_id);
        }
        Ok(Self {
            story_id: story_id.to_string(),
            qa_threshold,
            paragraph_ids,
            questions,
            question_adj,
            paragraph_adj,
            pruned: false,
            covering_questions: None,
            provider_failures: 0,
        })
    }

    pub fn story_id(&self) -> &str {
        &self.story_id
    }

    pub fn qa_threshold(&self) -> f64 {
        self.qa_threshold
    }

    pub fn is_pruned(&self) -> bool {
        self.pruned
    }

    /// Cover in greedy pick order, when pruned.
    pub fn covering_questions(&self) -> Option<&[String]> {
        self.covering_questions.as_deref()
    }

    /// Reader calls that failed during the build (treated as no edge).
    pub fn provider_failures(&self) -> usize {
        self.provider_failures
    }

    pub fn paragraph_ids(&self) -> &[String] {
        &self.paragraph_ids
    }

    pub fn question_ids(&self) -> impl Iterator<Item = &String> {
        self.questions.keys()
    }

    pub fn questions(&self) -> impl Iterator<Item = &QuestionNode> {
        self.questions.values()
    }

    pub fn question(&self, id: &str) -> Option<&QuestionNode> {
        self.questions.get(id)
    }

    pub fn question_by_text(&self, text: &str) -> Option<&QuestionNode> {
        self.questions.values().find(|q| q.text == text)
    }

    pub fn contains_paragraph(&self, id: &str) -> bool {
        self.paragraph_adj.contains_key(id)
    }

    pub fn question_count(&self) -> usize {
        self.questions.len()
    }

    pub fn edge_count(&self) -> usize {
        self.question_adj.values().map(BTreeMap::len).sum()
    }

    /// Edges sorted by (paragraph, question).
    pub fn edges(&self) -> Vec<Edge> {
        let mut out: Vec<Edge> = self
            .question_adj
            .iter()
            .flat_map(|(q, ps)| {
                ps.iter().map(move |(p, c)| Edge {
                    paragraph_id: p.clone(),
                    question_id: q.clone(),
                    confidence: *c,
                })
            })
            .collect();
        out.sort_by(|a, b| (&a.paragraph_id, &a.question_id).cmp(&(&b.paragraph_id, &b.question_id)));
        out
    }

    pub fn edge_confidence(&self, paragraph_id: &str, question_id: &str) -> Option<f64> {
        self.question_adj.get(question_id)?.get(paragraph_id).copied()
    }

    /// Questions adjacent to a paragraph (empty for unknown ids).
    pub fn paragraph_neighbors(&self, paragraph_id: &str) -> impl Iterator<Item = &String> {
        self.paragraph_adj.get(paragraph_id).into_iter().flatten()
    }

    /// Paragraphs adjacent to a question (empty for unknown ids).
    pub fn question_neighbors(&self, question_id: &str) -> impl Iterator<Item = &String> {
        self.question_adj.get(question_id).into_iter().flat_map(BTreeMap::keys)
    }

    pub fn paragraph_degree(&self, paragraph_id: &str) -> usize {
        self.paragraph_adj.get(paragraph_id).map_or(0, BTreeSet::len)
    }

    /// Paragraphs with at least one edge.
    pub fn coverable_paragraphs(&self) -> BTreeSet<&String> {
        self.paragraph_adj.iter().filter(|(_, qs)| !qs.is_empty()).map(|(p, _)| p).collect()
    }

    fn summed_confidence(&self, question_id: &str) -> f64 {
        self.question_adj.get(question_id).map_or(0.0, |ps| ps.values().sum())
    }

    /// Number of distinct paragraphs answering the question.
    pub fn question_importance(&self, question_id: &str) -> Result<usize, GraphError> {
        self.question_adj
            .get(question_id)
            .map(BTreeMap::len)
            .ok_or_else(|| GraphError::UnknownQuestion(question_id.to_string()))
    }

    /// Other questions sharing at least one paragraph, with the shared count,
    /// by count descending then id ascending.
    pub fn related_questions(&self, question_id: &str) -> Result<Vec<(String, usize)>, GraphError> {
        let mine = self
            .question_adj
            .get(question_id)
            .ok_or_else(|| GraphError::UnknownQuestion(question_id.to_string()))?;
        let mut shared: BTreeMap<&String, usize> = BTreeMap::new();
        for p in mine.keys() {
            for q in self.paragraph_neighbors(p) {
                if q != question_id {
                    *shared.entry(q).or_default() += 1;
                }
            }
        }
        let mut out: Vec<(String, usize)> = shared.into_iter().map(|(q, n)| (q.clone(), n)).collect();
        out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(out)
    }

    /// Greedy set cover over coverable paragraphs.
    ///
    /// Repeatedly takes the question covering the most uncovered paragraphs;
    /// ties go to the higher summed edge confidence, then the smaller id.
    pub fn greedy_set_cover(&self) -> Vec<String> {
        let mut uncovered: BTreeSet<&String> = self.coverable_paragraphs();
        let sums: BTreeMap<&String, f64> = self.question_adj.keys().map(|q| (q, self.summed_confidence(q))).collect();
        let mut cover = Vec::new();
        let mut chosen: BTreeSet<&String> = BTreeSet::new();
        while !uncovered.is_empty() {
            let mut best: Option<(&String, usize, f64)> = None;
            for (q, ps) in &self.question_adj {
                if chosen.contains(q) {
                    continue;
                }
                let gain = ps.keys().filter(|p| uncovered.contains(p)).count();
                if gain == 0 {
                    continue;
                }
                let sum = sums[q];
                // ids iterate ascending, so strict comparisons keep the smaller id on ties
                let better = match best {
                    None => true,
                    Some((_, g, s)) => gain > g || (gain == g && sum > s),
                };
                if better {
                    best = Some((q, gain, sum));
                }
            }
            let Some((q, _, _)) = best else { break };
            for p in self.question_adj[q].keys() {
                uncovered.remove(p);
            }
            chosen.insert(q);
            cover.push(q.clone());
        }
        cover
    }

    /// Subgraph restricted to `cover`; paragraph nodes are all kept.
    pub fn prune(&self, cover: &[String]) -> Result<PQGraph, GraphError> {
        let keep: BTreeSet<&String> = cover.iter().collect();
        for q in &keep {
            if !self.questions.contains_key(*q) {
                return Err(GraphError::UnknownQuestion((*q).clone()));
            }
        }
        let questions = self.questions.values().filter(|q| keep.contains(&q.id)).cloned().collect();
        let edges = self.edges().into_iter().filter(|e| keep.contains(&e.question_id)).collect();
        let mut g = PQGraph::new(&self.story_id, self.qa_threshold, self.paragraph_ids.clone(), questions, edges)?;
        g.pruned = true;
        g.covering_questions = Some(cover.to_vec());
        g.provider_failures = self.provider_failures;
        Ok(g)
    }

    /// `degree -> node count` for questions and for paragraphs.
    pub fn degree_histograms(&self) -> (BTreeMap<usize, usize>, BTreeMap<usize, usize>) {
        let mut qh = BTreeMap::new();
        for ps in self.question_adj.values() {
            *qh.entry(ps.len()).or_default() += 1;
        }
        let mut ph = BTreeMap::new();
        for qs in self.paragraph_adj.values() {
            *ph.entry(qs.len()).or_default() += 1;
        }
        (qh, ph)
    }
}

/// Collapse same-id records (identical text from several paragraphs) into one
/// node, keeping the best-scoring record; earlier records win ties.
pub fn merge_question_nodes(bank: &[Question]) -> Vec<QuestionNode> {
    let mut nodes: BTreeMap<&str, &Question> = BTreeMap::new();
    for q in bank {
        match nodes.get(q.id.as_str()) {
            Some(existing) if existing.score >= q.score => {}
            _ => {
                nodes.insert(&q.id, q);
            }
        }
    }
    nodes
        .into_values()
        .map(|q| QuestionNode {
            id: q.id.clone(),
            text: q.text.clone(),
            source_paragraph_id: q.source_paragraph_id.clone(),
            score: q.score,
        })
        .collect()
}

/// Evaluate every (paragraph, question) pair of the story with the reader.
pub fn build_graph(
    corpus: &Corpus,
    story_id: &str,
    bank: &[Question],
    reader: &dyn QuestionAnswerer,
    cfg: &EngineConfig,
) -> Result<PQGraph, GraphError> {
    if corpus.story(story_id).is_none() {
        return Err(GraphError::UnknownStory(story_id.to_string()));
    }
    let paragraphs = corpus.story_paragraphs(story_id);
    let nodes = merge_question_nodes(bank);
    let question_tokens: Vec<_> = if cfg.keyword_prefilter {
        nodes.iter().map(|q| content_tokens(&q.text)).collect()
    } else {
        Vec::new()
    };
    let failures = AtomicUsize::new(0);
    let edges: Vec<Edge> = paragraphs
        .par_iter()
        .map(|p| {
            let para_tokens = cfg.keyword_prefilter.then(|| content_tokens(&p.text));
            let mut out = Vec::new();
            for (i, q) in nodes.iter().enumerate() {
                if let Some(pt) = &para_tokens {
                    if question_tokens[i].is_disjoint(pt) {
                        continue;
                    }
                }
                match reader.answer_question(&q.text, p) {
                    Ok(v) if v.confidence >= cfg.qa_threshold => out.push(Edge {
                        paragraph_id: p.id.clone(),
                        question_id: q.id.clone(),
                        confidence: v.confidence,
                    }),
                    Ok(_) => {}
                    Err(e) => {
                        failures.fetch_add(1, Ordering::Relaxed);
                        tracing::warn!(paragraph = %p.id, question = %q.id, error = %e, "reader call failed; no edge");
                    }
                }
            }
            out
        })
        .flatten()
        .collect();
    let mut g = PQGraph::new(
        story_id,
        cfg.qa_threshold,
        paragraphs.iter().map(|p| p.id.clone()).collect(),
        nodes,
        edges,
    )?;
    g.provider_failures = failures.into_inner();
    Ok(g)
}

/// Both stages of a story graph, persisted together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryGraph {
    pub full: PQGraph,
    pub pruned: PQGraph,
}

impl StoryGraph {
    pub fn from_full(full: PQGraph) -> Result<Self, GraphError> {
        let cover = full.greedy_set_cover();
        let pruned = full.prune(&cover)?;
        Ok(Self { full, pruned })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: &str) -> QuestionNode {
        QuestionNode {
            id: id.into(),
            text: format!("text of {id}?"),
            source_paragraph_id: "p1".into(),
            score: 1.0,
        }
    }

    pub(crate) fn graph(paragraphs: &[&str], adj: &[(&str, &[&str])]) -> PQGraph {
        let edges = adj
            .iter()
            .flat_map(|(q, ps)| {
                ps.iter().map(move |p| Edge {
                    paragraph_id: p.to_string(),
                    question_id: q.to_string(),
                    confidence: 1.0,
                })
            })
            .collect();
        PQGraph::new(
            "s",
            0.5,
            paragraphs.iter().map(|p| p.to_string()).collect(),
            adj.iter().map(|(q, _)| node(q)).collect(),
            edges,
        )
        .unwrap()
    }

    fn example() -> PQGraph {
        graph(&["p1", "p2", "p3"], &[("q1", &["p1", "p2"]), ("q2", &["p2", "p3"]), ("q3", &["p2"])])
    }

    #[test]
    fn cover_of_small_example() {
        let g = example();
        let mut cover = g.greedy_set_cover();
        cover.sort();
        assert_eq!(cover, ["q1", "q2"]);
    }

    #[test]
    fn single_universal_question() {
        let g = graph(&["p1", "p2"], &[("qa", &["p1"]), ("qz", &["p1", "p2"])]);
        assert_eq!(g.greedy_set_cover(), ["qz"]);
    }

    #[test]
    fn edgeless_graph_has_empty_cover() {
        let g = graph(&["p1", "p2"], &[("q1", &[])]);
        assert!(g.greedy_set_cover().is_empty());
    }

    #[test]
    fn ties_prefer_confidence_then_id() {
        let mut g = graph(&["p1"], &[("qb", &["p1"]), ("qa", &["p1"])]);
        assert_eq!(g.greedy_set_cover(), ["qa"]);
        g.question_adj.get_mut("qb").unwrap().insert("p1".into(), 1.5);
        assert_eq!(g.greedy_set_cover(), ["qb"]);
    }

    #[test]
    fn prune_restricts_questions_keeps_paragraphs() {
        let g = example();
        let pruned = g.prune(&["q1".into(), "q2".into()]).unwrap();
        assert!(pruned.is_pruned());
        assert!(pruned.question("q3").is_none());
        assert_eq!(pruned.edge_count(), 4);
        assert_eq!(pruned.paragraph_ids(), g.paragraph_ids());

        let all: Vec<String> = g.question_ids().cloned().collect();
        let same = g.prune(&all).unwrap();
        assert_eq!(same.edges(), g.edges());
        assert!(same.is_pruned() && !g.is_pruned());

        let iso = graph(&["p1", "p9"], &[("q1", &["p1"])]).prune(&["q1".into()]).unwrap();
        assert!(iso.contains_paragraph("p9"));
        assert_eq!(iso.paragraph_degree("p9"), 0);
        assert!(g.prune(&["nope".into()]).is_err());
    }

    #[test]
    fn importance_is_degree() {
        let g = example().prune(&["q1".into(), "q2".into()]).unwrap();
        assert_eq!(g.question_importance("q1"), Ok(2));
        let one = graph(&["p1"], &[("q", &["p1"])]);
        assert_eq!(one.question_importance("q"), Ok(1));
        assert_eq!(g.question_importance("zz"), Err(GraphError::UnknownQuestion("zz".into())));
        // degree is unchanged by pruning
        assert_eq!(example().question_importance("q1"), Ok(2));
    }

    #[test]
    fn related_by_shared_paragraphs() {
        let g = example().prune(&["q1".into(), "q2".into()]).unwrap();
        assert_eq!(g.related_questions("q1").unwrap(), [("q2".to_string(), 1)]);
        let disjoint = graph(&["p1", "p2"], &[("a", &["p1"]), ("b", &["p2"])]);
        assert!(disjoint.related_questions("a").unwrap().is_empty());
        let star = graph(&["p1", "p2"], &[("a", &["p1", "p2"]), ("b", &["p1"]), ("c", &["p1", "p2"])]);
        assert_eq!(star.related_questions("a").unwrap(), [("c".to_string(), 2), ("b".to_string(), 1)]);
        assert_eq!(star.related_questions("b").unwrap(), [("a".to_string(), 1), ("c".to_string(), 1)]);
        assert!(star.related_questions("zz").is_err());
    }

    #[test]
    fn json_round_trip() {
        let g = example();
        let pruned = g.prune(&g.greedy_set_cover()).unwrap();
        let text = serde_json::to_string(&pruned).unwrap();
        let back: PQGraph = serde_json::from_str(&text).unwrap();
        assert_eq!(back, pruned);
        assert!(text.contains("\"covering_questions\""));
    }

    #[test]
    fn dangling_edge_rejected() {
        let err = PQGraph::new(
            "s",
            0.5,
            vec!["p1".into()],
            vec![node("q1")],
            vec![Edge {
                paragraph_id: "p2".into(),
                question_id: "q1".into(),
                confidence: 1.0,
            }],
        )
        .unwrap_err();
        assert!(matches!(err, GraphError::DanglingEdge(..)));
    }

    #[test]
    fn histograms() {
        let (qh, ph) = example().degree_histograms();
        assert_eq!(qh, BTreeMap::from([(1, 1), (2, 2)]));
        assert_eq!(ph, BTreeMap::from([(1, 2), (3, 1)]));
    }
}
