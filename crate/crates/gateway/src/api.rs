//! HTTP/JSON API.
//!
//! ```text
//! POST /api/games             {"first_mover": "spi" | "human"}  -> 201 Snapshot
//! GET  /api/games/{id}                                          -> 200 Snapshot
//! POST /api/games/{id}/moves  {"square": 1..9}                  -> 200 Snapshot | 404 | 409
//! GET  /api/games/{id}/trace                                    -> 200 {"turns": [...]}
//! ```

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use spi_ttt::{GameError, GameSession, Player, SessionError, SessionStatus, Square, TurnRecord};
use tower_http::services::ServeDir;

use crate::store::{SessionStore, SharedSlot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToMove {
    Human,
    Spi,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub game_id: String,
    /// Square codes 1 = human, 2 = empty, 3 = SPI, squares 1..9 in order.
    pub board: [u8; 9],
    pub status: SessionStatus,
    pub to_move: ToMove,
    pub last_measurements: Option<[f64; 9]>,
    pub last_pattern_index: Option<u8>,
    pub move_count: usize,
}

impl Snapshot {
    pub fn of(session: &GameSession) -> Snapshot {
        let last = session.last_scan();
        Snapshot {
            game_id: session.id().to_string(),
            board: session.board().codes(),
            status: session.status(),
            to_move: match session.to_move() {
                Some(Player::Human) => ToMove::Human,
                Some(Player::Spi) => ToMove::Spi,
                None => ToMove::None,
            },
            last_measurements: last.map(|(m, _)| m.0),
            last_pattern_index: last.and_then(|(_, code)| code.pattern_index()),
            move_count: session.history().len(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Trace {
    pub turns: Vec<TurnRecord>,
}

#[derive(Debug, Deserialize)]
pub struct CreateGame {
    pub first_mover: String,
}

#[derive(Debug, Deserialize)]
pub struct SubmitMove {
    pub square: i64,
}

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotFound(String),
    Conflict(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, message) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, m),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, m),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, m),
        };
        (status, Json(json!({ "error": message }))).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(rejection: JsonRejection) -> Self {
        ApiError::BadRequest(rejection.body_text())
    }
}

fn session_error(err: SessionError) -> ApiError {
    match err {
        SessionError::Game(GameError::InvalidSquare(n)) => {
            ApiError::BadRequest(format!("square {n} is out of range 1..=9"))
        }
        SessionError::Game(
            e @ (GameError::OccupiedSquare(_)
            | GameError::NotHumansTurn
            | GameError::NotSpisTurn
            | GameError::TerminalState),
        ) => ApiError::Conflict(e.to_string()),
        SessionError::Faulted => ApiError::Conflict(err.to_string()),
        other => ApiError::Internal(other.to_string()),
    }
}

#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SessionStore>,
}

/// Lets the SPI player respond if it is its turn or a final scan is due.
/// A detection fault leaves the session faulted and is reported through the
/// snapshot; any other failure restores the session as it was.
fn respond(session: &mut GameSession) -> Result<(), ApiError> {
    if session.to_move() != Some(Player::Spi) && !session.awaiting_final_scan() {
        return Ok(());
    }
    let before = session.clone();
    match session.spi_turn() {
        Ok(_) | Err(SessionError::DetectionMismatch { .. }) => Ok(()),
        Err(e) => {
            *session = before;
            Err(ApiError::Internal(e.to_string()))
        }
    }
}

fn find(state: &AppState, id: &str) -> Result<SharedSlot, ApiError> {
    state
        .store
        .get(id)
        .ok_or_else(|| ApiError::NotFound(format!("no game with id {id}")))
}

async fn create_game(
    State(state): State<AppState>,
    body: Result<Json<CreateGame>, JsonRejection>,
) -> Result<(StatusCode, Json<Snapshot>), ApiError> {
    let Json(body) = body?;
    let first_mover = match body.first_mover.as_str() {
        "spi" => Player::Spi,
        "human" => Player::Human,
        other => {
            return Err(ApiError::BadRequest(format!(
                "first_mover must be \"spi\" or \"human\", got {other:?}"
            )))
        }
    };
    let slot = state.store.create(first_mover);
    let mut slot = slot.lock();
    respond(&mut slot.session)?;
    slot.touched = Instant::now();
    Ok((StatusCode::CREATED, Json(Snapshot::of(&slot.session))))
}

async fn get_game(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Snapshot>, ApiError> {
    let slot = find(&state, &id)?;
    let slot = slot.lock();
    Ok(Json(Snapshot::of(&slot.session)))
}

async fn submit_move(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<SubmitMove>, JsonRejection>,
) -> Result<Json<Snapshot>, ApiError> {
    let slot = find(&state, &id)?;
    let Json(body) = body?;
    let square = u8::try_from(body.square)
        .ok()
        .and_then(|n| Square::new(n).ok())
        .ok_or_else(|| ApiError::BadRequest(format!("square {} is out of range 1..=9", body.square)))?;
    // concurrent submits to one game: the first holds the lock, the rest
    // are turned away
    let Some(mut slot) = slot.try_lock() else {
        return Err(ApiError::Conflict("another move for this game is in progress".into()));
    };
    slot.session.human_turn(square).map_err(session_error)?;
    respond(&mut slot.session)?;
    slot.touched = Instant::now();
    Ok(Json(Snapshot::of(&slot.session)))
}

async fn get_trace(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<Trace>, ApiError> {
    let slot = find(&state, &id)?;
    let slot = slot.lock();
    Ok(Json(Trace {
        turns: slot.session.history().to_vec(),
    }))
}

pub fn router(store: Arc<SessionStore>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/games", post(create_game))
        .route("/api/games/{id}", get(get_game))
        .route("/api/games/{id}/moves", post(submit_move))
        .route("/api/games/{id}/trace", get(get_trace))
        .with_state(AppState { store });
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Periodically drops idle sessions until the runtime shuts down.
pub fn spawn_evictor(store: Arc<SessionStore>, every: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(every);
        loop {
            tick.tick().await;
            let evicted = store.evict_idle(Instant::now());
            if evicted > 0 {
                tracing::info!(evicted, remaining = store.len(), "evicted idle games");
            }
        }
    })
}
