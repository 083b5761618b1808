//! HTTP/JSON and WebSocket front end for the engine.
//!
//! Batch operations (`/v1/replay`, `/v1/agent`, `/v1/stats`,
//! `/v1/timeline`) are stateless. Live sessions are created with
//! `POST /v1/sessions` and then driven either by posting NDJSON batches to
//! `/v1/sessions/{id}/messages` or over the WebSocket at
//! `/v1/sessions/{id}/ws`, where each text frame carries one or more
//! newline-separated client messages and each reply is one frame.

use std::collections::HashMap;
use std::io;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{DefaultBodyLimit, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use gestproxy_core::api::{
    do_agent, do_replay, do_stats, do_timeline, AgentRequest, ApiError, CreateSessionRequest, CreateSessionResponse,
    Health, ReplayRequest, SessionInfo, StatsRequest, TimelineRequest,
};
use gestproxy_core::protocol::{ServerMessage, Session};
use serde::Serialize;
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

/// Largest accepted request body: long traces run to hundreds of MB.
pub const BODY_LIMIT: usize = 512 * 1024 * 1024;

pub const NDJSON: &str = "application/x-ndjson";

type Shared<T> = Arc<Mutex<T>>;

#[derive(Default)]
struct AppState {
    sessions: Mutex<HashMap<String, Shared<Session>>>,
    next_id: AtomicU64,
}

impl AppState {
    fn session(&self, id: &str) -> Result<Shared<Session>, Failure> {
        self.sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| Failure(StatusCode::NOT_FOUND, ApiError::new(format!("no session {id}"))))
    }
}

/// An error status paired with its JSON body.
struct Failure(StatusCode, ApiError);

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<JsonRejection> for Failure {
    fn from(e: JsonRejection) -> Self {
        Failure(StatusCode::BAD_REQUEST, ApiError::new(e.body_text()))
    }
}

fn unprocessable(e: ApiError) -> Failure {
    Failure(StatusCode::UNPROCESSABLE_ENTITY, e)
}

/// Runs a CPU-bound operation off the async workers.
async fn blocking<T, R>(req: T, op: fn(&T) -> Result<R, ApiError>) -> Result<Json<R>, Failure>
where
    T: Send + 'static,
    R: Send + 'static,
{
    match tokio::task::spawn_blocking(move || op(&req)).await {
        Ok(result) => result.map(Json).map_err(unprocessable),
        Err(e) => Err(Failure(StatusCode::INTERNAL_SERVER_ERROR, ApiError::new(e.to_string()))),
    }
}

/// Builds the service router.
pub fn router() -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/v1/replay", post(replay))
        .route("/v1/agent", post(agent))
        .route("/v1/stats", post(stats))
        .route("/v1/timeline", post(timeline))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(session_info).delete(delete_session))
        .route("/v1/sessions/{id}/messages", post(session_messages))
        .route("/v1/sessions/{id}/ws", get(session_ws))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(Arc::new(AppState::default()))
}

/// Serves until the listener fails.
pub async fn serve(listener: TcpListener) -> io::Result<()> {
    axum::serve(listener, router()).await
}

/// Binds an ephemeral loopback port and serves on it in the background.
pub async fn spawn_local() -> io::Result<(SocketAddr, JoinHandle<io::Result<()>>)> {
    let listener = TcpListener::bind(("127.0.0.1", 0)).await?;
    let addr = listener.local_addr()?;
    Ok((addr, tokio::spawn(serve(listener))))
}

async fn health() -> Json<Health> {
    Json(Health { status: "ok".into(), version: env!("CARGO_PKG_VERSION").into() })
}

async fn replay(body: Result<Json<ReplayRequest>, JsonRejection>) -> Result<impl IntoResponse, Failure> {
    blocking(body?.0, do_replay).await
}

async fn agent(body: Result<Json<AgentRequest>, JsonRejection>) -> Result<impl IntoResponse, Failure> {
    blocking(body?.0, do_agent).await
}

async fn stats(body: Result<Json<StatsRequest>, JsonRejection>) -> Result<impl IntoResponse, Failure> {
    blocking(body?.0, do_stats).await
}

async fn timeline(body: Result<Json<TimelineRequest>, JsonRejection>) -> Result<impl IntoResponse, Failure> {
    blocking(body?.0, do_timeline).await
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Result<Json<CreateSessionRequest>, JsonRejection>,
) -> Result<impl IntoResponse, Failure> {
    let req = body?.0;
    let id = format!("s{}", state.next_id.fetch_add(1, Ordering::Relaxed) + 1);
    let session = Session::new(id.clone(), req.config, req.screen).map_err(|e| unprocessable(ApiError::new(e.to_string())))?;
    state.sessions.lock().unwrap().insert(id.clone(), Arc::new(Mutex::new(session)));
    tracing::info!(session = %id, "session created");
    Ok((StatusCode::CREATED, Json(CreateSessionResponse { session_id: id })))
}

async fn session_info(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SessionInfo>, Failure> {
    let session = state.session(&id)?;
    let info = SessionInfo::of(&session.lock().unwrap());
    Ok(Json(info))
}

async fn delete_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<StatusCode, Failure> {
    state.session(&id)?;
    state.sessions.lock().unwrap().remove(&id);
    Ok(StatusCode::NO_CONTENT)
}

fn to_ndjson<T: Serialize>(items: &[T]) -> String {
    items.iter().map(|m| serde_json::to_string(m).expect("message serializes") + "\n").collect()
}

/// Feeds every non-blank line to the session, in order.
fn handle_lines(session: &Mutex<Session>, text: &str) -> Vec<ServerMessage> {
    let mut session = session.lock().unwrap();
    text.lines().filter(|l| !l.trim().is_empty()).flat_map(|l| session.handle_line(l)).collect()
}

async fn session_messages(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: String,
) -> Result<Response, Failure> {
    let session = state.session(&id)?;
    let replies = handle_lines(&session, &body);
    Ok(([(header::CONTENT_TYPE, NDJSON)], to_ndjson(&replies)).into_response())
}

async fn session_ws(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    ws: WebSocketUpgrade,
) -> Result<Response, Failure> {
    let session = state.session(&id)?;
    Ok(ws.on_upgrade(move |socket| drive_socket(socket, session)))
}

async fn drive_socket(mut socket: WebSocket, session: Shared<Session>) {
    while let Some(Ok(message)) = socket.recv().await {
        let text = match message {
            Message::Text(text) => text.to_string(),
            Message::Binary(bytes) => String::from_utf8_lossy(&bytes).into_owned(),
            Message::Close(_) => break,
            Message::Ping(_) | Message::Pong(_) => continue,
        };
        for reply in handle_lines(&session, &text) {
            let line = serde_json::to_string(&reply).expect("message serializes");
            if socket.send(Message::Text(line.into())).await.is_err() {
                return;
            }
        }
    }
}
