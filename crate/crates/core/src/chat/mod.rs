//! Story chatrooms: event timeline, clarifications, Q&A and recommendations.
//!
//! [`ChatEngine`] owns the immutable corpus and pruned graphs plus the mutable
//! sessions. Each session sits behind its own mutex, so requests for one
//! session are serialized while distinct sessions run in parallel.

mod classify;
mod trim;

pub use classify::{classify_utterance, Utterance, MAX_SURFACE_WORDS};
pub use trim::trim_reply;

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::config::{ChatConfig, EngineConfig};
use crate::conversation::{new_state, AnswerChoice, AskedQuestion, ConversationError, ConversationState, Origin, PrecomputedAnswers};
use crate::corpus::{Corpus, Event};
use crate::pipeline::{self, PipelineError};
use crate::pq_graph::PQGraph;
use crate::providers::{Geo, Providers};
use crate::store::{self, get_json, put_json, DocumentStore, StoreError};
use crate::text::{char_len, slice_chars, Span};

pub const SMALL_TALK_REPLY: &str = "I can only talk about this story. Ask me a question about it, pick one of the suggested questions, or ask who someone is, where a place is, or what an acronym stands for.";
pub const NO_ANSWER_REPLY: &str = "Sorry, I could not find an answer to that in this story.";
pub const ANSWER_ERROR_REPLY: &str = "Sorry, I cannot answer right now. Please try again.";
pub const EVENT_ERROR_REPLY: &str = "This event summary is unavailable right now.";
pub const RECOMMEND_PROMPT: &str = "You might also want to ask:";
pub const RECOMMEND_DONE: &str = "You have covered every question in this story.";

pub fn no_entry_reply(surface: &str) -> String {
    format!("No entry found for {surface}.")
}

/// Longest accepted session id, in bytes.
pub const MAX_SESSION_ID_LEN: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sender {
    User,
    System,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Event,
    Question,
    Answer,
    Clarification,
    NoAnswer,
    Error,
    Recommendations,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuggestedQuestion {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub id: String,
    pub room_id: String,
    pub sender: Sender,
    pub kind: MessageKind,
    pub text: String,
    /// Character offsets into `text`; answers only.
    pub answer_span: Option<Span>,
    /// Publisher of the answering article.
    pub source: Option<String>,
    pub repeat: bool,
    pub timestamp: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paragraph_id: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub questions: Vec<SuggestedQuestion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geo: Option<Geo>,
}

impl ChatMessage {
    fn system(room_id: &str, kind: MessageKind, text: impl Into<String>, timestamp: DateTime<Utc>) -> Self {
        Self {
            id: String::new(),
            room_id: room_id.to_string(),
            sender: Sender::System,
            kind,
            text: text.into(),
            answer_span: None,
            source: None,
            repeat: false,
            timestamp,
            event_id: None,
            paragraph_id: None,
            questions: Vec::new(),
            geo: None,
        }
    }

    /// The bolded part of an answer.
    pub fn answer_text(&self) -> Option<&str> {
        self.answer_span.map(|s| slice_chars(&self.text, s))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub story_id: String,
    pub title: String,
    pub last_active: Option<DateTime<Utc>>,
    pub open_sessions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenRoom {
    pub session_id: String,
    pub story_id: String,
    pub title: String,
    /// Latest events oldest first, then the recommendations message.
    pub messages: Vec<ChatMessage>,
    pub has_previous: bool,
    /// Anchor for [`ChatEngine::earlier_events`].
    pub oldest_event_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventPage {
    /// Newest first.
    pub messages: Vec<ChatMessage>,
    pub has_previous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendations {
    pub message: ChatMessage,
    /// Answers for the current read set are cached.
    pub precomputed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    pub stored: ConversationState,
    pub replayed: ConversationState,
    pub matches: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum ChatError {
    #[error("unknown story `{0}`")]
    UnknownStory(String),
    #[error("story `{0}` is not ready; run build-bank and build-graph for it")]
    NotReady(String),
    #[error("unknown session `{0}`; open a room first")]
    UnknownSession(String),
    #[error("session `{session}` belongs to story `{story}`")]
    SessionStoryMismatch { session: String, story: String },
    #[error("event `{event}` is not part of story `{story}`")]
    UnknownEvent { story: String, event: String },
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Conversation(#[from] ConversationError),
}

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Settable clock for tests and reproducible transcripts.
#[derive(Debug)]
pub struct ManualClock {
    now: Mutex<DateTime<Utc>>,
}

impl ManualClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        Self { now: Mutex::new(start) }
    }

    pub fn advance(&self, by: chrono::Duration) {
        *self.now.lock().expect("clock lock") += by;
    }

    pub fn set(&self, to: DateTime<Utc>) {
        *self.now.lock().expect("clock lock") = to;
    }
}

impl Clock for ManualClock {
    fn now(&self) -> DateTime<Utc> {
        *self.now.lock().expect("clock lock")
    }
}

impl<C: Clock + ?Sized> Clock for Arc<C> {
    fn now(&self) -> DateTime<Utc> {
        (**self).now()
    }
}

/// Persisted form of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub state: ConversationState,
    /// Messages issued so far; message ids count up from here.
    pub message_seq: u64,
    pub last_active: DateTime<Utc>,
}

#[derive(Debug)]
struct Session {
    record: SessionRecord,
    cache: PrecomputedAnswers,
    cache_ready: bool,
}

impl Session {
    fn new(record: SessionRecord) -> Self {
        Self {
            record,
            cache: PrecomputedAnswers::default(),
            cache_ready: false,
        }
    }

    fn stamp(&mut self, mut msg: ChatMessage) -> ChatMessage {
        self.record.message_seq += 1;
        msg.id = format!("{}-{:04}", self.record.state.session_id, self.record.message_seq);
        msg
    }

    fn cached(&self, question_id: &str) -> Option<&Option<AnswerChoice>> {
        if !self.cache_ready {
            return None;
        }
        self.cache.get(&self.record.state, question_id)
    }
}

pub struct ChatEngine {
    corpus: Arc<Corpus>,
    graphs: HashMap<String, Arc<PQGraph>>,
    providers: Providers,
    engine_cfg: EngineConfig,
    chat_cfg: ChatConfig,
    store: Arc<dyn DocumentStore>,
    clock: Arc<dyn Clock>,
    sessions: RwLock<HashMap<String, Arc<Mutex<Session>>>>,
    activity: Mutex<HashMap<String, DateTime<Utc>>>,
}

impl std::fmt::Debug for ChatEngine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChatEngine")
            .field("stories", &self.corpus.summary().stories)
            .field("graphs", &self.graphs.len())
            .finish_non_exhaustive()
    }
}

impl ChatEngine {
    /// `graphs` maps story ids to pruned graphs; stories without one are not ready.
    pub fn new(
        corpus: Arc<Corpus>,
        graphs: BTreeMap<String, PQGraph>,
        providers: Providers,
        engine_cfg: EngineConfig,
        chat_cfg: ChatConfig,
        store: Arc<dyn DocumentStore>,
    ) -> Self {
        Self {
            corpus,
            graphs: graphs.into_iter().map(|(k, v)| (k, Arc::new(v))).collect(),
            providers,
            engine_cfg,
            chat_cfg,
            store,
            clock: Arc::new(SystemClock),
            sessions: RwLock::new(HashMap::new()),
            activity: Mutex::new(HashMap::new()),
        }
    }

    /// Corpus and every built graph from `store`.
    pub fn from_store(
        store: Arc<dyn DocumentStore>,
        providers: Providers,
        engine_cfg: EngineConfig,
        chat_cfg: ChatConfig,
    ) -> Result<Self, ChatError> {
        let corpus = pipeline::load_corpus(store.as_ref())?;
        let mut graphs = BTreeMap::new();
        for key in store.keys(store::GRAPHS)? {
            if let Some(g) = pipeline::load_graph(store.as_ref(), &key)? {
                graphs.insert(key, g.pruned);
            }
        }
        Ok(Self::new(Arc::new(corpus), graphs, providers, engine_cfg, chat_cfg, store))
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn graph(&self, story_id: &str) -> Option<&PQGraph> {
        self.graphs.get(story_id).map(|g| g.as_ref())
    }

    pub fn engine_config(&self) -> &EngineConfig {
        &self.engine_cfg
    }

    fn visible(&self, story_id: &str) -> bool {
        self.corpus.story(story_id).is_some() && !self.chat_cfg.blocklist.iter().any(|b| b == story_id)
    }

    fn ready_graph(&self, story_id: &str) -> Result<Arc<PQGraph>, ChatError> {
        if !self.visible(story_id) {
            return Err(ChatError::UnknownStory(story_id.to_string()));
        }
        self.graphs
            .get(story_id)
            .cloned()
            .ok_or_else(|| ChatError::NotReady(story_id.to_string()))
    }

    /// Rooms for every listed story, most recently active first.
    pub fn list_rooms(&self) -> Vec<Room> {
        let activity = self.activity.lock().expect("activity lock").clone();
        let mut open: HashMap<String, usize> = HashMap::new();
        for session in self.sessions.read().expect("sessions lock").values() {
            let s = session.lock().expect("session lock");
            *open.entry(s.record.state.story_id.clone()).or_default() += 1;
        }
        let mut rooms: Vec<Room> = self
            .corpus
            .list_stories()
            .into_iter()
            .filter(|s| self.visible(&s.id))
            .map(|s| {
                let last_active = match (s.latest_event_at, activity.get(&s.id)) {
                    (Some(a), Some(b)) => Some(a.max(*b)),
                    (a, b) => a.or(b.copied()),
                };
                Room {
                    open_sessions: open.get(&s.id).copied().unwrap_or(0),
                    story_id: s.id,
                    title: s.name,
                    last_active,
                }
            })
            .collect();
        rooms.sort_by(|a, b| match (a.last_active, b.last_active) {
            (Some(x), Some(y)) => y.cmp(&x).then_with(|| a.story_id.cmp(&b.story_id)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.story_id.cmp(&b.story_id),
        });
        rooms
    }

    fn check_session_id(session_id: &str) -> Result<(), ChatError> {
        if session_id.trim().is_empty() || session_id.len() > MAX_SESSION_ID_LEN {
            return Err(ChatError::BadRequest(format!(
                "session id must be 1 to {MAX_SESSION_ID_LEN} bytes"
            )));
        }
        Ok(())
    }

    fn load_session(&self, session_id: &str) -> Result<Option<Arc<Mutex<Session>>>, ChatError> {
        if let Some(s) = self.sessions.read().expect("sessions lock").get(session_id) {
            return Ok(Some(s.clone()));
        }
        let Some(record) = get_json::<SessionRecord>(self.store.as_ref(), store::SESSIONS, session_id)? else {
            return Ok(None);
        };
        let mut sessions = self.sessions.write().expect("sessions lock");
        let entry = sessions
            .entry(session_id.to_string())
            .or_insert_with(|| Arc::new(Mutex::new(Session::new(record))));
        Ok(Some(entry.clone()))
    }

    fn session(&self, session_id: &str) -> Result<Arc<Mutex<Session>>, ChatError> {
        self.load_session(session_id)?
            .ok_or_else(|| ChatError::UnknownSession(session_id.to_string()))
    }

    fn persist(&self, session: &Session) -> Result<(), ChatError> {
        put_json(
            self.store.as_ref(),
            store::SESSIONS,
            &session.record.state.session_id,
            &session.record,
        )?;
        Ok(())
    }

    fn touch(&self, story_id: &str, now: DateTime<Utc>) {
        let mut activity = self.activity.lock().expect("activity lock");
        let slot = activity.entry(story_id.to_string()).or_insert(now);
        *slot = (*slot).max(now);
    }

    fn event_message(&self, story_id: &str, event: &Event) -> ChatMessage {
        let (kind, text) = match self.providers.summarizer.summarize_event(&event.headline_pool) {
            Ok(text) => (MessageKind::Event, text),
            Err(e) => {
                tracing::warn!(event = %event.id, error = %e, "event summary failed");
                (MessageKind::Error, EVENT_ERROR_REPLY.to_string())
            }
        };
        let mut msg = ChatMessage::system(story_id, kind, text, event.occurred_at);
        msg.event_id = Some(event.id.clone());
        msg
    }

    fn recommendations_message(&self, graph: &PQGraph, state: &ConversationState, now: DateTime<Utc>) -> ChatMessage {
        let questions: Vec<SuggestedQuestion> = state
            .recommend(graph, &self.engine_cfg)
            .into_iter()
            .filter_map(|id| {
                graph.question(&id).map(|q| SuggestedQuestion {
                    id: q.id.clone(),
                    text: q.text.clone(),
                })
            })
            .collect();
        let text = if questions.is_empty() { RECOMMEND_DONE } else { RECOMMEND_PROMPT };
        let mut msg = ChatMessage::system(&state.story_id, MessageKind::Recommendations, text, now);
        msg.questions = questions;
        msg
    }

    /// Enter a story's room, creating the session or resuming it.
    pub fn open_room(&self, session_id: &str, story_id: &str) -> Result<OpenRoom, ChatError> {
        Self::check_session_id(session_id)?;
        let graph = self.ready_graph(story_id)?;
        let now = self.clock.now();
        let session = match self.load_session(session_id)? {
            Some(s) => s,
            None => {
                let state = new_state(session_id, story_id, Some(&graph))?;
                let fresh = Arc::new(Mutex::new(Session::new(SessionRecord {
                    state,
                    message_seq: 0,
                    last_active: now,
                })));
                self.sessions
                    .write()
                    .expect("sessions lock")
                    .entry(session_id.to_string())
                    .or_insert(fresh)
                    .clone()
            }
        };
        let mut s = session.lock().expect("session lock");
        if s.record.state.story_id != story_id {
            return Err(ChatError::SessionStoryMismatch {
                session: session_id.to_string(),
                story: s.record.state.story_id.clone(),
            });
        }
        let story = self.corpus.story(story_id).ok_or_else(|| ChatError::UnknownStory(story_id.to_string()))?;
        let latest = &story.event_ids[story.event_ids.len().saturating_sub(2)..];
        let mut messages = Vec::new();
        for eid in latest {
            let event = self.corpus.event(eid).expect("validated corpus");
            let msg = self.event_message(story_id, event);
            s.record.state.shown_events.insert(eid.clone());
            messages.push(s.stamp(msg));
        }
        let rec = self.recommendations_message(&graph, &s.record.state, now);
        messages.push(s.stamp(rec));
        s.record.last_active = now;
        self.persist(&s)?;
        Ok(OpenRoom {
            session_id: session_id.to_string(),
            story_id: story_id.to_string(),
            title: story.name.clone(),
            messages,
            has_previous: story.event_ids.len() > 2,
            oldest_event_id: latest.first().cloned(),
        })
    }

    /// Up to `limit` events strictly older than `before`, newest first.
    ///
    /// With a session the events are recorded as shown and messages get
    /// session-scoped ids; without one ids derive from the event ids.
    pub fn earlier_events(
        &self,
        session_id: Option<&str>,
        story_id: &str,
        before: &str,
        limit: usize,
    ) -> Result<EventPage, ChatError> {
        if !self.visible(story_id) {
            return Err(ChatError::UnknownStory(story_id.to_string()));
        }
        let story = self.corpus.story(story_id).expect("visible story");
        let anchor = story
            .event_ids
            .iter()
            .position(|e| e == before)
            .ok_or_else(|| ChatError::UnknownEvent {
                story: story_id.to_string(),
                event: before.to_string(),
            })?;
        let from = anchor.saturating_sub(limit);
        let page: Vec<&Event> = story.event_ids[from..anchor]
            .iter()
            .rev()
            .map(|e| self.corpus.event(e).expect("validated corpus"))
            .collect();
        let mut messages: Vec<ChatMessage> = page.iter().map(|e| self.event_message(story_id, e)).collect();
        if let Some(sid) = session_id {
            let session = self.session(sid)?;
            let mut s = session.lock().expect("session lock");
            if s.record.state.story_id != story_id {
                return Err(ChatError::SessionStoryMismatch {
                    session: sid.to_string(),
                    story: s.record.state.story_id.clone(),
                });
            }
            messages = messages
                .into_iter()
                .map(|m| {
                    if let Some(e) = &m.event_id {
                        s.record.state.shown_events.insert(e.clone());
                    }
                    s.stamp(m)
                })
                .collect();
            self.persist(&s)?;
        } else {
            for m in &mut messages {
                m.id = format!("event-{}", m.event_id.as_deref().unwrap_or_default());
            }
        }
        Ok(EventPage {
            messages,
            has_previous: from > 0,
        })
    }

    /// Handle one user utterance; returns the user's message followed by the replies.
    ///
    /// With `origin` recommended the text (or `question_id`) names a graph
    /// question and a valid precomputed answer is served without calling
    /// the reader. Provider failures produce an error message and leave the
    /// state untouched.
    pub fn post_message(
        &self,
        session_id: &str,
        text: &str,
        origin: Origin,
        question_id: Option<&str>,
    ) -> Result<Vec<ChatMessage>, ChatError> {
        let text = text.trim();
        if text.is_empty() {
            return Err(ChatError::BadRequest("message text is empty".into()));
        }
        let session = self.session(session_id)?;
        let mut s = session.lock().expect("session lock");
        let story_id = s.record.state.story_id.clone();
        let graph = self.ready_graph(&story_id)?;
        let now = self.clock.now();
        self.touch(&story_id, now);

        let mut user = ChatMessage::system(&story_id, MessageKind::Question, text, now);
        user.sender = Sender::User;
        let mut out = vec![s.stamp(user)];
        let replies = self.respond(&mut s, &graph, text, origin, question_id, now, true);
        out.extend(replies.into_iter().map(|m| s.stamp(m)));
        s.record.last_active = now;
        self.persist(&s)?;
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn respond(
        &self,
        s: &mut Session,
        graph: &PQGraph,
        text: &str,
        origin: Origin,
        question_id: Option<&str>,
        now: DateTime<Utc>,
        use_cache: bool,
    ) -> Vec<ChatMessage> {
        let story_id = s.record.state.story_id.clone();
        let log = |s: &mut Session| {
            s.record.state.asked_questions.push(AskedQuestion {
                text: text.to_string(),
                timestamp: now,
                origin,
            })
        };
        let route = match origin {
            Origin::Recommended => Utterance::OpenQuestion,
            Origin::FreeForm => classify_utterance(text, &self.chat_cfg),
        };
        match route {
            Utterance::SmallTalk => {
                log(s);
                vec![ChatMessage::system(&story_id, MessageKind::NoAnswer, SMALL_TALK_REPLY, now)]
            }
            Utterance::Clarification { kind, surface } => match self.providers.entities.lookup_entity(&surface, kind) {
                Ok(Some(card)) => {
                    log(s);
                    let mut msg = ChatMessage::system(&story_id, MessageKind::Clarification, card.summary, now);
                    msg.geo = card.geo;
                    vec![msg]
                }
                Ok(None) => {
                    log(s);
                    vec![ChatMessage::system(&story_id, MessageKind::NoAnswer, no_entry_reply(&surface), now)]
                }
                Err(e) => {
                    tracing::warn!(surface = %surface, error = %e, "entity lookup failed");
                    vec![ChatMessage::system(&story_id, MessageKind::Error, ANSWER_ERROR_REPLY, now)]
                }
            },
            Utterance::OpenQuestion => {
                let qid = match origin {
                    Origin::Recommended => question_id
                        .map(str::to_string)
                        .or_else(|| graph.question_by_text(text).map(|q| q.id.clone())),
                    Origin::FreeForm => None,
                };
                let cached = if use_cache { qid.as_deref().and_then(|q| s.cached(q).cloned()) } else { None };
                let choice = match cached {
                    Some(choice) => choice,
                    None => match s.record.state.select_answer_paragraph(
                        graph,
                        &self.corpus,
                        text,
                        self.providers.answers.as_ref(),
                        &self.engine_cfg,
                    ) {
                        Ok(choice) => choice,
                        Err(e) => {
                            tracing::warn!(error = %e, "answering failed");
                            return vec![ChatMessage::system(&story_id, MessageKind::Error, ANSWER_ERROR_REPLY, now)];
                        }
                    },
                };
                log(s);
                let Some(choice) = choice else {
                    return vec![ChatMessage::system(&story_id, MessageKind::NoAnswer, NO_ANSWER_REPLY, now)];
                };
                let answer = self.answer_message(&story_id, &choice, now);
                if let Err(e) = s.record.state.mark_read(graph, &choice.paragraph_id) {
                    tracing::error!(error = %e, "served paragraph outside the graph");
                }
                let rec = self.recommendations_message(graph, &s.record.state, now);
                vec![answer, rec]
            }
        }
    }

    fn answer_message(&self, story_id: &str, choice: &AnswerChoice, now: DateTime<Utc>) -> ChatMessage {
        let paragraph = self.corpus.paragraph(&choice.paragraph_id).expect("graph paragraphs are in the corpus");
        let full = Span::new(0, char_len(&paragraph.text));
        let span = choice.verdict.answer_span.unwrap_or(full);
        let (text, span) = trim_reply(&paragraph.text, span, self.engine_cfg.reply_word_target);
        let mut msg = ChatMessage::system(story_id, MessageKind::Answer, text, now);
        msg.answer_span = Some(span);
        msg.source = self.corpus.paragraph_source(&paragraph.id).map(str::to_string);
        msg.repeat = choice.repeat;
        msg.paragraph_id = Some(paragraph.id.clone());
        msg
    }

    /// Current recommendations for a session.
    pub fn recommendations(&self, session_id: &str) -> Result<Recommendations, ChatError> {
        let session = self.session(session_id)?;
        let s = session.lock().expect("session lock");
        let graph = self.ready_graph(&s.record.state.story_id)?;
        let mut message = self.recommendations_message(&graph, &s.record.state, self.clock.now());
        message.id = format!("{}-rec-v{}", session_id, s.record.state.version());
        Ok(Recommendations {
            message,
            precomputed: s.cache_ready && s.cache.is_valid_for(&s.record.state),
        })
    }

    /// Answer the session's current recommendations ahead of time.
    ///
    /// The reader runs without holding the session lock. The result is
    /// installed only if the read set did not change meanwhile; returns
    /// whether it was.
    pub fn precompute(&self, session_id: &str) -> Result<bool, ChatError> {
        let session = self.session(session_id)?;
        let state = session.lock().expect("session lock").record.state.clone();
        let graph = self.ready_graph(&state.story_id)?;
        let cache = state.precompute_answers(&graph, &self.corpus, self.providers.answers.as_ref(), &self.engine_cfg);
        let mut s = session.lock().expect("session lock");
        if cache.is_valid_for(&s.record.state) {
            s.cache = cache;
            s.cache_ready = true;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    pub fn session_state(&self, session_id: &str) -> Result<ConversationState, ChatError> {
        let session = self.session(session_id)?;
        let s = session.lock().expect("session lock");
        Ok(s.record.state.clone())
    }

    /// Rebuild a stored session from its question log and compare.
    ///
    /// Shown events are not part of the log and are carried over as stored.
    pub fn replay(&self, session_id: &str) -> Result<ReplayReport, ChatError> {
        let record = get_json::<SessionRecord>(self.store.as_ref(), store::SESSIONS, session_id)?
            .ok_or_else(|| ChatError::UnknownSession(session_id.to_string()))?;
        let stored = record.state;
        let graph = self.ready_graph(&stored.story_id)?;
        let fresh = new_state(session_id, &stored.story_id, Some(&graph))?;
        let mut s = Session::new(SessionRecord {
            state: fresh,
            message_seq: 0,
            last_active: record.last_active,
        });
        for asked in &stored.asked_questions {
            self.respond(&mut s, &graph, &asked.text, asked.origin, None, asked.timestamp, false);
        }
        let mut replayed = s.record.state;
        replayed.shown_events = stored.shown_events.clone();
        Ok(ReplayReport {
            matches: replayed == stored,
            stored,
            replayed,
        })
    }
}

#[cfg(test)]
mod tests;
