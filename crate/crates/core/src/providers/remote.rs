//! JSON-over-HTTP provider clients.
//!
//! Each capability is one `POST` endpoint:
//!
//! | capability | request | response |
//! |---|---|---|
//! | questions | `{"paragraph_text": str, "k": int}` | `{"questions": [{"text": str, "score": float}]}` |
//! | answers | `{"paragraph_text": str, "question": str}` | `{"confidence": float, "span": [start, end] \| null}` |
//! | summaries | `{"headlines": [str]}` | `{"text": str}` |
//! | entities | `{"surface": str, "kind": "person"\|"org"\|"place"\|"acronym"}` | `{"card": {"name", "summary", "geo"?} \| null}` |
//!
//! Span offsets are character offsets into `paragraph_text`. Requests time out
//! after the configured duration (10 s by default) and are never retried.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{
    EntityCard, EntityKind, EntityLookup, EventSummarizer, GeneratedQuestion, ProviderError, QaVerdict,
    QuestionAnswerer, QuestionGenerator,
};
use crate::corpus::Paragraph;
use crate::text::{char_len, Span};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

#[derive(Debug, Clone)]
struct Endpoint {
    agent: ureq::Agent,
    url: String,
}

impl Endpoint {
    fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder().timeout_global(Some(timeout)).build().into();
        Self { agent, url: url.into() }
    }

    fn post<Req: Serialize, Resp: DeserializeOwned>(&self, body: &Req) -> Result<Resp, ProviderError> {
        let mut response = self.agent.post(&self.url).send_json(body).map_err(map_error)?;
        response
            .body_mut()
            .read_json::<Resp>()
            .map_err(|e| ProviderError::InvalidResponse(e.to_string()))
    }
}

fn map_error(e: ureq::Error) -> ProviderError {
    match e {
        ureq::Error::Timeout(_) => ProviderError::Timeout,
        ureq::Error::StatusCode(code) => ProviderError::Transport(format!("HTTP status {code}")),
        other => ProviderError::Transport(other.to_string()),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QuestionRequest {
    pub paragraph_text: String,
    pub k: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScoredQuestion {
    pub text: String,
    pub score: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QuestionResponse {
    pub questions: Vec<ScoredQuestion>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnswerRequest {
    pub paragraph_text: String,
    pub question: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AnswerResponse {
    pub confidence: f64,
    #[serde(default)]
    pub span: Option<Span>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SummaryRequest {
    pub headlines: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SummaryResponse {
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EntityRequest {
    pub surface: String,
    pub kind: EntityKind,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EntityResponse {
    #[serde(default)]
    pub card: Option<EntityCard>,
}

#[derive(Debug, Clone)]
pub struct RemoteQuestionGenerator {
    endpoint: Endpoint,
}

impl RemoteQuestionGenerator {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        Self {
            endpoint: Endpoint::new(url, timeout),
        }
    }
}

impl QuestionGenerator for RemoteQuestionGenerator {
    fn generate_questions(&self, paragraph: &Paragraph, k: usize) -> Result<Vec<GeneratedQuestion>, ProviderError> {
        let resp: QuestionResponse = self.endpoint.post(&QuestionRequest {
            paragraph_text: paragraph.text.clone(),
            k,
        })?;
        let mut out = Vec::with_capacity(resp.questions.len());
        for q in resp.questions {
            let text = q.text.trim().to_string();
            if !text.ends_with('?') {
                return Err(ProviderError::InvalidResponse(format!("question `{text}` does not end with '?'")));
            }
            if !(q.score > 0.0 && q.score <= 1.0) {
                return Err(ProviderError::InvalidResponse(format!("score {} outside (0, 1]", q.score)));
            }
            out.push(GeneratedQuestion {
                text,
                score: q.score,
                paragraph_id: paragraph.id.clone(),
            });
        }
        out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.text.cmp(&b.text)));
        out.truncate(k);
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct RemoteAnswerer {
    endpoint: Endpoint,
}

impl RemoteAnswerer {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        Self {
            endpoint: Endpoint::new(url, timeout),
        }
    }
}

impl QuestionAnswerer for RemoteAnswerer {
    fn answer_question(&self, question: &str, paragraph: &Paragraph) -> Result<QaVerdict, ProviderError> {
        let resp: AnswerResponse = self.endpoint.post(&AnswerRequest {
            paragraph_text: paragraph.text.clone(),
            question: question.to_string(),
        })?;
        if !(0.0..=1.0).contains(&resp.confidence) {
            return Err(ProviderError::InvalidResponse(format!(
                "confidence {} outside [0, 1]",
                resp.confidence
            )));
        }
        if resp.confidence == 0.0 {
            return Ok(QaVerdict::unanswerable());
        }
        let len = char_len(&paragraph.text);
        match resp.span {
            Some(span) if span.start < span.end && span.end <= len => Ok(QaVerdict {
                confidence: resp.confidence,
                answer_span: Some(span),
            }),
            Some(span) => Err(ProviderError::InvalidResponse(format!(
                "span [{}, {}) outside paragraph of {len} characters",
                span.start, span.end
            ))),
            None => Err(ProviderError::InvalidResponse("positive confidence without a span".into())),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RemoteSummarizer {
    endpoint: Endpoint,
}

impl RemoteSummarizer {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        Self {
            endpoint: Endpoint::new(url, timeout),
        }
    }
}

impl EventSummarizer for RemoteSummarizer {
    fn summarize_event(&self, headline_pool: &[String]) -> Result<String, ProviderError> {
        let resp: SummaryResponse = self.endpoint.post(&SummaryRequest {
            headlines: headline_pool.to_vec(),
        })?;
        Ok(resp.text)
    }
}

#[derive(Debug, Clone)]
pub struct RemoteEntityLookup {
    endpoint: Endpoint,
}

impl RemoteEntityLookup {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        Self {
            endpoint: Endpoint::new(url, timeout),
        }
    }
}

impl EntityLookup for RemoteEntityLookup {
    fn lookup_entity(&self, surface: &str, kind: EntityKind) -> Result<Option<EntityCard>, ProviderError> {
        let resp: EntityResponse = self.endpoint.post(&EntityRequest {
            surface: surface.to_string(),
            kind,
        })?;
        Ok(resp.card.map(|mut card| {
            if kind != EntityKind::Place {
                card.geo = None;
            }
            let blocks: Vec<&str> = card.summary.split("\n\n").take(2).collect();
            card.summary = blocks.join("\n\n");
            card
        }))
    }
}
