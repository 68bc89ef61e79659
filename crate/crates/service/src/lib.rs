//! HTTP/JSON facade over competitions stored under one data directory.
//!
//! ```text
//! POST /competitions/{id}/submissions   {"team": "...", "csv": "..."} or {"team": "...", "digest": "..."}
//! GET  /competitions/{id}/leaderboard?board=public|private
//! POST /competitions/{id}/close
//! GET  /health
//! ```
//!
//! Submissions to one competition pass through a single mutex, so the log
//! order is the order in which scores were handed out. Leaderboard reads
//! serve the last published snapshot and never wait on a submission.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ladder_core::store::{BoardKind, Competition, SPEC_FILE};
use ladder_core::{Error, LeaderboardEntry};
use serde::{Deserialize, Serialize};

pub const DATA_DIR_ENV: &str = "LADDER_DATA_DIR";
pub const PORT_ENV: &str = "LADDER_PORT";
pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitRequest {
    pub team: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitResponse {
    /// `None` when a per-rank board placed the submission nowhere.
    pub score: Option<f64>,
    pub seq: u64,
    pub mechanism: String,
    pub digest: String,
}

#[derive(Debug, Deserialize)]
struct BoardQuery {
    board: Option<BoardKind>,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(ErrorBody { error: self.1 })).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Sealed(_) => StatusCode::FORBIDDEN,
            Error::Consistency(_) => StatusCode::CONFLICT,
            e if e.is_validation() => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            log::error!("{e}");
        }
        ApiError(status, e.to_string())
    }
}

#[derive(Clone)]
struct Snapshot {
    public: Arc<Vec<LeaderboardEntry>>,
    private: Option<Arc<Vec<LeaderboardEntry>>>,
}

struct Handle {
    writer: Mutex<Competition>,
    snapshot: RwLock<Snapshot>,
}

impl Handle {
    fn publish(&self, comp: &Competition) -> Result<(), Error> {
        let public = Arc::new(comp.leaderboard(BoardKind::Public)?);
        let private = if comp.spec().closed {
            Some(Arc::new(comp.leaderboard(BoardKind::Private)?))
        } else {
            None
        };
        *self.snapshot.write().expect("snapshot lock") = Snapshot { public, private };
        Ok(())
    }
}

/// Shared state: the data directory and the competitions opened so far.
#[derive(Clone)]
pub struct AppState {
    data_dir: PathBuf,
    fsync: bool,
    open: Arc<Mutex<HashMap<String, Arc<Handle>>>>,
}

impl AppState {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        AppState {
            data_dir: data_dir.into(),
            fsync: true,
            open: Arc::default(),
        }
    }

    /// Whether log appends are synced to disk before responding.
    pub fn with_fsync(mut self, fsync: bool) -> Self {
        self.fsync = fsync;
        self
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    fn valid_id(id: &str) -> bool {
        !id.is_empty()
            && id != "."
            && id != ".."
            && id
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.'))
    }

    /// Opens (once) and returns the competition `id`. Runs on a blocking
    /// thread since opening replays the log.
    fn handle(&self, id: &str) -> Result<Arc<Handle>, ApiError> {
        let not_found = || ApiError(StatusCode::NOT_FOUND, format!("no competition {id:?}"));
        if !Self::valid_id(id) {
            return Err(not_found());
        }
        let mut open = self.open.lock().expect("registry lock");
        if let Some(h) = open.get(id) {
            return Ok(h.clone());
        }
        let dir = self.data_dir.join(id);
        if !dir.join(SPEC_FILE).is_file() {
            return Err(not_found());
        }
        let (comp, torn) = Competition::open(&dir, self.fsync)?;
        if let Some(t) = torn {
            log::warn!("{id}: dropped {} torn bytes at the end of the event log", t.len);
        }
        let handle = Arc::new(Handle {
            snapshot: RwLock::new(Snapshot {
                public: Arc::default(),
                private: None,
            }),
            writer: Mutex::new(comp),
        });
        handle.publish(&handle.writer.lock().expect("writer lock"))?;
        open.insert(id.to_owned(), handle.clone());
        Ok(handle)
    }
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ApiError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

async fn submit(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<SubmitRequest>,
) -> Result<Json<SubmitResponse>, ApiError> {
    let resp = blocking(move || {
        let handle = state.handle(&id)?;
        let mut comp = handle.writer.lock().expect("writer lock");
        let event = match (&req.csv, &req.digest) {
            (Some(csv), None) => {
                let preds = comp.parse(csv.as_bytes())?;
                comp.submit(&req.team, &preds, now_ms())?
            }
            (None, Some(digest)) => comp.submit_digest(&req.team, digest, now_ms())?,
            _ => {
                return Err(ApiError(
                    StatusCode::BAD_REQUEST,
                    "give exactly one of \"csv\" and \"digest\"".into(),
                ))
            }
        };
        handle.publish(&comp)?;
        Ok(SubmitResponse {
            score: event.score,
            seq: event.seq,
            mechanism: comp.spec().mechanism.name().to_owned(),
            digest: event.digest,
        })
    })
    .await?;
    Ok(Json(resp))
}

async fn leaderboard(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<BoardQuery>,
) -> Result<Json<Vec<LeaderboardEntry>>, ApiError> {
    let handle = blocking(move || state.handle(&id)).await?;
    let snap = handle.snapshot.read().expect("snapshot lock").clone();
    match q.board.unwrap_or(BoardKind::Public) {
        BoardKind::Public => Ok(Json(snap.public.as_ref().clone())),
        BoardKind::Private => match snap.private {
            Some(p) => Ok(Json(p.as_ref().clone())),
            None => Err(ApiError(
                StatusCode::FORBIDDEN,
                "the private leaderboard is sealed until the competition closes".into(),
            )),
        },
    }
}

async fn close(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<StatusCode, ApiError> {
    blocking(move || {
        let handle = state.handle(&id)?;
        let mut comp = handle.writer.lock().expect("writer lock");
        comp.close()?;
        handle.publish(&comp)?;
        Ok(())
    })
    .await?;
    Ok(StatusCode::NO_CONTENT)
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/competitions/{id}/submissions", post(submit))
        .route("/competitions/{id}/leaderboard", get(leaderboard))
        .route("/competitions/{id}/close", post(close))
        .with_state(state)
}

/// Serves until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
