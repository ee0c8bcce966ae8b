//! JSON API over a shared [`ChatEngine`].
//!
//! Routes are served under both `/api` and `/api/v1`:
//!
//! | method | path | body / query |
//! |---|---|---|
//! | GET | `/rooms` | |
//! | POST | `/rooms/{story_id}/open` | optional `{"session_id"}` |
//! | GET | `/rooms/{story_id}/events` | `before`, `limit`, `session` |
//! | POST | `/sessions/{sid}/messages` | `{"text", "origin", "question_id"}` |
//! | GET | `/sessions/{sid}/recommendations` | `wait_ms` long-poll |

use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use newschat_core::chat::{ChatError, ChatMessage, EventPage, OpenRoom, Recommendations, Room};
use newschat_core::conversation::Origin;
use newschat_core::ChatEngine;
use serde::{Deserialize, Serialize};

pub const DEFAULT_EVENT_LIMIT: usize = 2;
pub const MAX_EVENT_LIMIT: usize = 50;
pub const MAX_WAIT_MS: u64 = 30_000;
const POLL_INTERVAL: Duration = Duration::from_millis(20);

#[derive(Clone)]
pub struct AppState {
    engine: Arc<ChatEngine>,
    /// Answer recommendations in the background after every reply.
    precompute: bool,
}

impl AppState {
    pub fn new(engine: Arc<ChatEngine>) -> Self {
        Self { engine, precompute: true }
    }

    pub fn without_precompute(mut self) -> Self {
        self.precompute = false;
        self
    }

    pub fn engine(&self) -> &Arc<ChatEngine> {
        &self.engine
    }

    fn spawn_precompute(&self, session_id: String) {
        if !self.precompute {
            return;
        }
        let engine = self.engine.clone();
        tokio::task::spawn_blocking(move || {
            if let Err(e) = engine.precompute(&session_id) {
                tracing::warn!(session = %session_id, error = %e, "precompute failed");
            }
        });
    }
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/rooms", get(list_rooms))
        .route("/rooms/{story_id}/open", post(open_room))
        .route("/rooms/{story_id}/events", get(earlier_events))
        .route("/sessions/{sid}/messages", post(post_message))
        .route("/sessions/{sid}/recommendations", get(recommendations));
    Router::new()
        .nest("/api", api.clone())
        .nest("/api/v1", api)
        .with_state(state)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            code: "bad_request",
            message: message.into(),
        }
    }
}

impl From<ChatError> for ApiError {
    fn from(e: ChatError) -> Self {
        let (status, code) = match &e {
            ChatError::UnknownStory(_) | ChatError::UnknownSession(_) | ChatError::UnknownEvent { .. } => {
                (StatusCode::NOT_FOUND, "not_found")
            }
            ChatError::NotReady(_) => (StatusCode::CONFLICT, "not_ready"),
            ChatError::SessionStoryMismatch { .. } => (StatusCode::CONFLICT, "session_conflict"),
            ChatError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        if status.is_server_error() {
            tracing::error!(error = %e, "request failed");
        }
        Self {
            status,
            code,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code.to_string(),
            message: self.message,
        };
        (self.status, Json(serde_json::json!({ "error": body }))).into_response()
    }
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, ChatError> + Send + 'static,
    T: Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map_err(ApiError::from),
        Err(e) => Err(ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "internal",
            message: e.to_string(),
        }),
    }
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<Option<T>, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(None);
    }
    serde_json::from_slice(body)
        .map(Some)
        .map_err(|e| ApiError::bad_request(format!("invalid JSON body: {e}")))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RoomList {
    pub rooms: Vec<Room>,
}

async fn list_rooms(State(app): State<AppState>) -> Json<RoomList> {
    Json(RoomList {
        rooms: app.engine.list_rooms(),
    })
}

#[derive(Debug, Default, Serialize, Deserialize)]
pub struct OpenRequest {
    pub session_id: Option<String>,
}

async fn open_room(
    State(app): State<AppState>,
    Path(story_id): Path<String>,
    body: Bytes,
) -> Result<Json<OpenRoom>, ApiError> {
    let req: OpenRequest = parse_body(&body)?.unwrap_or_default();
    let sid = req.session_id.unwrap_or_else(|| uuid::Uuid::new_v4().to_string());
    let engine = app.engine.clone();
    let opened = {
        let sid = sid.clone();
        blocking(move || engine.open_room(&sid, &story_id)).await?
    };
    app.spawn_precompute(sid);
    Ok(Json(opened))
}

#[derive(Debug, Deserialize)]
pub struct EventsQuery {
    pub before: Option<String>,
    pub limit: Option<usize>,
    pub session: Option<String>,
}

async fn earlier_events(
    State(app): State<AppState>,
    Path(story_id): Path<String>,
    Query(q): Query<EventsQuery>,
) -> Result<Json<EventPage>, ApiError> {
    let before = q.before.ok_or_else(|| ApiError::bad_request("missing `before` event id"))?;
    let limit = q.limit.unwrap_or(DEFAULT_EVENT_LIMIT);
    if limit > MAX_EVENT_LIMIT {
        return Err(ApiError::bad_request(format!("limit must be at most {MAX_EVENT_LIMIT}")));
    }
    let engine = app.engine.clone();
    let page = blocking(move || engine.earlier_events(q.session.as_deref(), &story_id, &before, limit)).await?;
    Ok(Json(page))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MessageRequest {
    pub text: String,
    #[serde(default = "free_form")]
    pub origin: Origin,
    #[serde(default)]
    pub question_id: Option<String>,
}

fn free_form() -> Origin {
    Origin::FreeForm
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MessageBatch {
    pub messages: Vec<ChatMessage>,
}

async fn post_message(
    State(app): State<AppState>,
    Path(sid): Path<String>,
    body: Bytes,
) -> Result<Json<MessageBatch>, ApiError> {
    let req: MessageRequest = parse_body(&body)?.ok_or_else(|| ApiError::bad_request("missing JSON body"))?;
    let engine = app.engine.clone();
    let messages = {
        let sid = sid.clone();
        blocking(move || engine.post_message(&sid, &req.text, req.origin, req.question_id.as_deref())).await?
    };
    app.spawn_precompute(sid);
    Ok(Json(MessageBatch { messages }))
}

#[derive(Debug, Deserialize)]
pub struct RecommendationsQuery {
    /// Wait up to this long for answers to be precomputed.
    pub wait_ms: Option<u64>,
}

async fn recommendations(
    State(app): State<AppState>,
    Path(sid): Path<String>,
    Query(q): Query<RecommendationsQuery>,
) -> Result<Json<Recommendations>, ApiError> {
    let deadline = Instant::now() + Duration::from_millis(q.wait_ms.unwrap_or(0).min(MAX_WAIT_MS));
    loop {
        let engine = app.engine.clone();
        let sid = sid.clone();
        let recs = blocking(move || engine.recommendations(&sid)).await?;
        if recs.precomputed || Instant::now() >= deadline {
            return Ok(Json(recs));
        }
        tokio::time::sleep(POLL_INTERVAL).await;
    }
}
