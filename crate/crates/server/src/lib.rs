//! HTTP sessions in which a human plays Opponent against the machine.
//!
//! Routes, all under `/v1`:
//! `POST /sessions`, `GET /sessions/{id}`, `GET /sessions/{id}/moves`,
//! `POST /sessions/{id}/moves`.

pub mod play;
pub mod wire;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dialogic::gkk::SearchLimits;
use dialogic::parse::{parse_formula, parse_term};
use dialogic::translate::find_winning_strategy;
use tokio::sync::Mutex as SessionLock;

use play::{Match, PlayError};
use wire::{CreateRequest, DescriptorJson, MoveRequest, SessionJson};

pub const DEFAULT_IDLE: Duration = Duration::from_secs(30 * 60);

struct Session {
    id: String,
    formula: String,
    play: Match,
    last_used: Instant,
}

type Shared = Arc<SessionLock<Session>>;

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<Mutex<HashMap<String, Shared>>>,
    idle: Duration,
    limits: SearchLimits,
}

impl AppState {
    pub fn new(idle: Duration, limits: SearchLimits) -> AppState {
        AppState {
            sessions: Arc::default(),
            idle,
            limits,
        }
    }

    /// Drops sessions idle for longer than the expiry; returns how many.
    pub async fn sweep(&self) -> usize {
        let entries: Vec<(String, Shared)> =
            self.sessions.lock().unwrap().iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        let mut expired = Vec::new();
        for (id, s) in entries {
            if let Ok(s) = s.try_lock() {
                if s.last_used.elapsed() > self.idle {
                    expired.push(id);
                }
            }
        }
        let mut map = self.sessions.lock().unwrap();
        for id in &expired {
            map.remove(id);
        }
        expired.len()
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().unwrap().len()
    }

    fn get(&self, id: &str) -> Result<Shared, ApiError> {
        self.sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "not-found", format!("no session `{id}`")))
    }
}

impl Default for AppState {
    fn default() -> Self {
        AppState::new(DEFAULT_IDLE, SearchLimits::default())
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    reason: String,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, reason: &str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            reason: reason.into(),
            message: message.into(),
        }
    }
}

impl From<PlayError> for ApiError {
    fn from(e: PlayError) -> ApiError {
        let (status, reason) = match &e {
            PlayError::WrongTurn => (StatusCode::CONFLICT, "wrong-turn".to_string()),
            PlayError::NoSuchChoice(_) => (StatusCode::UNPROCESSABLE_ENTITY, "no-such-choice".to_string()),
            PlayError::MissingTerm => (StatusCode::UNPROCESSABLE_ENTITY, "missing-term".to_string()),
            PlayError::Illegal(m) => (StatusCode::UNPROCESSABLE_ENTITY, m.reason.to_string()),
        };
        ApiError::new(status, &reason, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.message, "reason": self.reason });
        (self.status, Json(body)).into_response()
    }
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
}

fn describe(s: &Session) -> SessionJson {
    SessionJson::new(&s.id, &s.formula, &s.play)
}

async fn create(State(state): State<AppState>, Json(req): Json<CreateRequest>) -> Result<(StatusCode, Json<SessionJson>), ApiError> {
    let root = parse_formula(&req.formula).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "parse", e.to_string()))?;
    if !root.free_variables().is_empty() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "open-formula", "the formula must be closed"));
    }
    let limits = req.limits.unwrap_or(state.limits);
    let play = tokio::task::spawn_blocking(move || {
        let strategy = find_winning_strategy(&root, &limits)
            .ok()
            .flatten()
            .filter(|s| s.validate().is_ok() && s.is_winning());
        Match::new(root, strategy, limits)
    })
    .await
    .map_err(internal)?;
    let session = Session {
        id: uuid::Uuid::new_v4().to_string(),
        formula: req.formula,
        play,
        last_used: Instant::now(),
    };
    let body = describe(&session);
    let id = session.id.clone();
    state.sessions.lock().unwrap().insert(id, Arc::new(SessionLock::new(session)));
    Ok((StatusCode::CREATED, Json(body)))
}

async fn show(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionJson>, ApiError> {
    let shared = state.get(&id)?;
    let mut s = shared.lock().await;
    s.last_used = Instant::now();
    Ok(Json(describe(&s)))
}

async fn moves(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Vec<DescriptorJson>>, ApiError> {
    let shared = state.get(&id)?;
    let mut s = shared.lock().await;
    s.last_used = Instant::now();
    let options = s.play.legal_moves()?;
    Ok(Json(options.iter().enumerate().map(|(i, d)| DescriptorJson::new(i, d)).collect()))
}

async fn play_move(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<MoveRequest>,
) -> Result<Json<SessionJson>, ApiError> {
    let shared = state.get(&id)?;
    let mut s = shared.clone().lock_owned().await;
    s.last_used = Instant::now();
    let term = req
        .term
        .as_deref()
        .map(parse_term)
        .transpose()
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "parse", e.to_string()))?;
    let mv = req
        .mv
        .as_ref()
        .map(|m| m.to_move())
        .transpose()
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "schema", e.to_string()))?;
    let choice = req.choice;
    if mv.is_none() && choice.is_none() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "schema", "send `choice` (with `term` if needed) or `move`"));
    }
    let (s, result) = tokio::task::spawn_blocking(move || {
        let mut s = s;
        let result = match (mv, choice) {
            (Some(mv), _) => s.play.play(mv),
            (None, Some(i)) => s.play.play_choice(i, term.as_ref()),
            (None, None) => unreachable!(),
        };
        (s, result)
    })
    .await
    .map_err(internal)?;
    result?;
    Ok(Json(describe(&s)))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/v1/sessions", post(create))
        .route("/v1/sessions/{id}", get(show))
        .route("/v1/sessions/{id}/moves", get(moves).post(play_move))
        .with_state(state)
}

/// Serves until the process is stopped, sweeping idle sessions every minute.
pub async fn serve(addr: std::net::SocketAddr, state: AppState) -> std::io::Result<()> {
    let sweeper = state.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            sweeper.sweep().await;
        }
    });
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}
