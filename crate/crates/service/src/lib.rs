//! Live decoding sessions for the browser playground.
//!
//! HTTP JSON endpoints create, inspect and delete sessions; each session has
//! one WebSocket stream carrying keydowns in and decoder state out. See
//! `PROTOCOL.md` for the wire format.

pub mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tapfuse::decoder::DecoderModels;
use tapfuse::keyboard::KeyboardLayout;
use tokio::sync::Mutex;

pub use session::{ClientMessage, CreateSession, Ellipse, KeyScore, Reply, Session, SessionMetrics};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    BadRequest,
    NotFound,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServiceError {
    pub kind: ErrorKind,
    pub message: String,
    /// Dotted path of the offending request field, when there is one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl ServiceError {
    pub fn bad_request(field: impl Into<String>, message: impl Into<String>) -> Self {
        let field: String = field.into();
        ServiceError {
            kind: ErrorKind::BadRequest,
            message: message.into(),
            field: (!field.is_empty()).then_some(field),
        }
    }

    pub fn not_found(id: &str) -> Self {
        ServiceError {
            kind: ErrorKind::NotFound,
            message: format!("no session {id:?}"),
            field: None,
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        ServiceError {
            kind: ErrorKind::Internal,
            message: message.into(),
            field: None,
        }
    }

    fn status(&self) -> StatusCode {
        match self.kind {
            ErrorKind::BadRequest => StatusCode::BAD_REQUEST,
            ErrorKind::NotFound => StatusCode::NOT_FOUND,
            ErrorKind::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub v: u32,
    pub error: ServiceError,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = self.status();
        (status, Json(ErrorBody { v: SCHEMA_VERSION, error: self })).into_response()
    }
}

/// Parses JSON, reporting the path of the field that failed.
pub fn parse_json<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ServiceError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { String::new() } else { path };
        ServiceError::bad_request(field, e.into_inner().to_string())
    })
}

type SessionHandle = Arc<Mutex<Session>>;

/// Shared read-only models plus the session table.
pub struct AppState {
    models: Arc<DecoderModels>,
    layout: KeyboardLayout,
    sessions: std::sync::Mutex<HashMap<String, SessionHandle>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(models: DecoderModels, layout: KeyboardLayout) -> Arc<AppState> {
        Arc::new(AppState {
            models: Arc::new(models),
            layout,
            sessions: Default::default(),
            next_id: AtomicU64::new(1),
        })
    }

    pub fn create(&self, req: CreateSession) -> Result<String, ServiceError> {
        let id = format!("s{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let session = Session::new(id.clone(), self.models.clone(), req)?;
        self.sessions
            .lock()
            .expect("session table lock")
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        Ok(id)
    }

    pub fn get(&self, id: &str) -> Result<SessionHandle, ServiceError> {
        self.sessions
            .lock()
            .expect("session table lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::not_found(id))
    }

    pub fn remove(&self, id: &str) -> Result<(), ServiceError> {
        self.sessions
            .lock()
            .expect("session table lock")
            .remove(id)
            .map(|_| ())
            .ok_or_else(|| ServiceError::not_found(id))
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session table lock").len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Created {
    pub v: u32,
    pub id: String,
}

#[derive(Serialize)]
struct LayoutBody<'a> {
    v: u32,
    layout: &'a KeyboardLayout,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/layout", get(layout))
        .route("/sessions", post(create))
        .route("/sessions/{id}", axum::routing::delete(delete))
        .route("/sessions/{id}/metrics", get(metrics))
        .route("/sessions/{id}/stream", get(stream))
        .with_state(state)
}

async fn layout(State(state): State<Arc<AppState>>) -> Response {
    Json(LayoutBody {
        v: SCHEMA_VERSION,
        layout: &state.layout,
    })
    .into_response()
}

async fn create(State(state): State<Arc<AppState>>, body: Bytes) -> Result<(StatusCode, Json<Created>), ServiceError> {
    let req: CreateSession = if body.iter().all(u8::is_ascii_whitespace) {
        CreateSession::default()
    } else {
        parse_json(&body)?
    };
    let id = state.create(req)?;
    Ok((StatusCode::CREATED, Json(Created { v: SCHEMA_VERSION, id })))
}

async fn delete(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<StatusCode, ServiceError> {
    state.remove(&id)?;
    Ok(StatusCode::NO_CONTENT)
}

async fn metrics(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SessionMetrics>, ServiceError> {
    let session = state.get(&id)?;
    let m = session.lock().await.metrics();
    Ok(Json(m))
}

async fn stream(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Result<Response, ServiceError> {
    state.get(&id)?;
    Ok(ws.on_upgrade(move |socket| run_stream(socket, state, id)))
}

/// Replies go out in the order messages arrive; the session is looked up
/// per message so a deleted session yields error frames, not a hang-up.
async fn run_stream(mut socket: WebSocket, state: Arc<AppState>, id: String) {
    while let Some(Ok(msg)) = socket.recv().await {
        let text = match msg {
            Message::Text(t) => t,
            Message::Close(_) => break,
            _ => continue,
        };
        let reply = handle_frame(&state, &id, text.as_bytes()).await;
        let out = match reply {
            Ok(r) => serde_json::to_string(&r),
            Err(e) => serde_json::to_string(&ErrorBody { v: SCHEMA_VERSION, error: e }),
        }
        .expect("reply serializes");
        if socket.send(Message::Text(out.into())).await.is_err() {
            break;
        }
    }
}

async fn handle_frame(state: &AppState, id: &str, bytes: &[u8]) -> Result<Reply, ServiceError> {
    let msg: ClientMessage = parse_json(bytes)?;
    let session = state.get(id)?;
    let mut guard = session.lock().await;
    guard.handle(&msg)
}

/// Character 6-gram, word trigram and trie trained on the bundled phrase set,
/// with the default key prior.
pub fn bundled_models(layout: &KeyboardLayout) -> tapfuse::Result<DecoderModels> {
    let phrases = tapfuse::phrases::bundled();
    let refs: Vec<&str> = phrases.iter().map(String::as_str).collect();
    let vocab = tapfuse::experiment::vocabulary(&phrases);
    let keys = tapfuse::keyboard::KeyTouchModel::default_prior(layout);
    tapfuse::experiment::train_models(&refs, &vocab, &keys, 6, 3)
}

/// Binds and serves until the task is cancelled.
pub async fn serve(addr: SocketAddr, state: Arc<AppState>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}
