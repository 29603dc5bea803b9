//! HTTP play service for human participants.
//!
//! Physics is server-authoritative: every accepted placement runs on the
//! noiseless engine from the pristine level and the client only replays the
//! returned frames. Each session plays its level sequence in order; a level
//! ends when it is solved or its clock runs out, and the clock starts when
//! the level is first viewed.

mod clock;
mod levels;
mod store;

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::Mutex;
use vtools_core::level::{Action, LevelSpec};
use vtools_core::trajectory::{TrajectoryDoc, DEFAULT_FRAME_STRIDE};
use vtools_core::{AttemptError, NoiseConfig};

pub use clock::{Clock, ManualClock, SystemClock};
pub use levels::{LevelStore, LevelSummary, ServedLevel};
pub use store::{AttemptRecord, IndexEntry, Store};

/// Error body of every failed request.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApiError {
    pub reason: String,
    pub detail: String,
    #[serde(skip)]
    pub status: u16,
}

impl ApiError {
    pub fn new(status: StatusCode, reason: &str, detail: impl Into<String>) -> Self {
        ApiError { reason: reason.to_string(), detail: detail.into(), status: status.as_u16() }
    }

    fn not_found(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not-found", detail)
    }

    fn bad_request(detail: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad-request", detail)
    }

    fn conflict(reason: &str, detail: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, reason, detail)
    }

    fn internal(detail: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", detail.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevelStatus {
    Pending,
    Active,
    Solved,
    Expired,
}

#[derive(Clone, Debug)]
struct LevelProgress {
    started_ms: Option<u64>,
    attempts: usize,
    status: LevelStatus,
}

#[derive(Debug)]
struct Session {
    id: String,
    levels: Vec<String>,
    progress: Vec<LevelProgress>,
    closed: bool,
}

impl Session {
    /// Marks an active level expired once its clock has run out.
    fn refresh(&mut self, levels: &LevelStore, now_ms: u64) {
        for (name, p) in self.levels.iter().zip(self.progress.iter_mut()) {
            if let (LevelStatus::Active, Some(start)) = (p.status, p.started_ms) {
                let limit = levels.get(name).map_or(f64::INFINITY, |l| l.spec.time_limit);
                if elapsed_s(start, now_ms) >= limit {
                    p.status = LevelStatus::Expired;
                }
            }
        }
    }

    fn current(&self) -> Option<usize> {
        self.progress.iter().position(|p| matches!(p.status, LevelStatus::Pending | LevelStatus::Active))
    }

    fn position(&self, level: &str) -> Result<usize, ApiError> {
        self.levels
            .iter()
            .position(|l| l == level)
            .ok_or_else(|| ApiError::not_found(format!("level `{level}` is not part of session {}", self.id)))
    }
}

fn elapsed_s(start_ms: u64, now_ms: u64) -> f64 {
    now_ms.saturating_sub(start_ms) as f64 / 1000.0
}

pub struct AppState {
    levels: LevelStore,
    store: Store,
    clock: Arc<dyn Clock>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    next_id: Mutex<usize>,
}

impl AppState {
    pub fn new(levels: LevelStore, store: Store, clock: Arc<dyn Clock>) -> std::io::Result<Arc<AppState>> {
        let next_id = store.index()?.len() + 1;
        Ok(Arc::new(AppState { levels, store, clock, sessions: Mutex::new(HashMap::new()), next_id: Mutex::new(next_id) }))
    }

    pub fn levels(&self) -> &LevelStore {
        &self.levels
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    async fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions.lock().await.get(id).cloned().ok_or_else(|| ApiError::not_found(format!("no session `{id}`")))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/levels", get(list_levels))
        .route("/levels/{name}", get(get_level))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session_status))
        .route("/sessions/{id}/close", post(close_session))
        .route("/sessions/{id}/levels/{name}", get(view_level))
        .route("/sessions/{id}/levels/{name}/attempts", post(post_attempt))
        .route("/sessions/{id}/log", get(session_log))
        .with_state(state)
}

/// Parses a JSON body, reporting problems in the shared error shape.
fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(e.to_string()))
}

async fn list_levels(State(state): State<Arc<AppState>>) -> Json<Vec<LevelSummary>> {
    Json(state.levels.summaries())
}

async fn get_level(State(state): State<Arc<AppState>>, Path(name): Path<String>) -> Result<Response, ApiError> {
    let level = state.levels.get(&name).ok_or_else(|| ApiError::not_found(format!("no level `{name}`")))?;
    Ok(([(header::CONTENT_TYPE, "application/json")], level.document.clone()).into_response())
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewSession {
    #[serde(default)]
    participant: String,
    levels: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelState {
    pub level: String,
    pub status: LevelStatus,
    pub attempts: usize,
    pub time_limit: f64,
    /// Seconds left on the level clock; the full limit before the first view.
    pub remaining: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub closed: bool,
    pub current: Option<String>,
    pub levels: Vec<LevelState>,
}

fn level_state(levels: &LevelStore, name: &str, p: &LevelProgress, now_ms: u64) -> LevelState {
    let limit = levels.get(name).map_or(0.0, |l| l.spec.time_limit);
    let remaining = match (p.status, p.started_ms) {
        (LevelStatus::Expired, _) => 0.0,
        (_, Some(start)) => (limit - elapsed_s(start, now_ms)).max(0.0),
        (_, None) => limit,
    };
    LevelState { level: name.to_string(), status: p.status, attempts: p.attempts, time_limit: limit, remaining }
}

fn session_view(levels: &LevelStore, s: &Session, now_ms: u64) -> SessionView {
    SessionView {
        id: s.id.clone(),
        closed: s.closed,
        current: s.current().filter(|_| !s.closed).map(|i| s.levels[i].clone()),
        levels: s.levels.iter().zip(&s.progress).map(|(n, p)| level_state(levels, n, p, now_ms)).collect(),
    }
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> Result<(StatusCode, Json<SessionView>), ApiError> {
    let req: NewSession = if body.is_empty() { NewSession::default() } else { parse_body(&body)? };
    let levels = req.levels.unwrap_or_else(|| state.levels.names());
    if levels.is_empty() {
        return Err(ApiError::bad_request("a session needs at least one level"));
    }
    for (i, name) in levels.iter().enumerate() {
        if state.levels.get(name).is_none() {
            return Err(ApiError::bad_request(format!("unknown level `{name}`")));
        }
        if levels[..i].contains(name) {
            return Err(ApiError::bad_request(format!("level `{name}` listed twice")));
        }
    }
    let now = state.clock.now_ms();
    let mut next_id = state.next_id.lock().await;
    let entry = IndexEntry { id: format!("s{:06}", *next_id), participant: req.participant, levels: levels.clone(), created_ms: now };
    state.store.add_session(&entry).map_err(ApiError::internal)?;
    *next_id += 1;
    let session = Session {
        id: entry.id.clone(),
        progress: vec![LevelProgress { started_ms: None, attempts: 0, status: LevelStatus::Pending }; levels.len()],
        levels,
        closed: false,
    };
    let view = session_view(&state.levels, &session, now);
    state.sessions.lock().await.insert(entry.id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn session_status(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let session = state.session(&id).await?;
    let mut s = session.lock().await;
    let now = state.clock.now_ms();
    s.refresh(&state.levels, now);
    Ok(Json(session_view(&state.levels, &s, now)))
}

async fn close_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let session = state.session(&id).await?;
    let mut s = session.lock().await;
    let now = state.clock.now_ms();
    s.refresh(&state.levels, now);
    s.closed = true;
    Ok(Json(session_view(&state.levels, &s, now)))
}

/// Checks that `name` is the level the session is on, returning its index.
fn playable(s: &Session, name: &str) -> Result<usize, ApiError> {
    if s.closed {
        return Err(ApiError::conflict("session-closed", format!("session {} is closed", s.id)));
    }
    let i = s.position(name)?;
    match s.progress[i].status {
        LevelStatus::Solved => return Err(ApiError::conflict("session-advanced", format!("`{name}` is already solved"))),
        LevelStatus::Expired => return Err(ApiError::conflict("clock-expired", format!("time is up on `{name}`"))),
        LevelStatus::Pending | LevelStatus::Active => {}
    }
    if s.current() != Some(i) {
        let current = s.current().map_or("none", |c| s.levels[c].as_str());
        return Err(ApiError::conflict("level-locked", format!("finish `{current}` before `{name}`")));
    }
    Ok(i)
}

async fn view_level(
    State(state): State<Arc<AppState>>,
    Path((id, name)): Path<(String, String)>,
) -> Result<Json<LevelState>, ApiError> {
    let session = state.session(&id).await?;
    let mut s = session.lock().await;
    let now = state.clock.now_ms();
    s.refresh(&state.levels, now);
    let i = s.position(&name)?;
    // Finished levels stay viewable; only the current one starts a clock.
    if matches!(s.progress[i].status, LevelStatus::Pending | LevelStatus::Active) {
        let i = playable(&s, &name)?;
        let p = &mut s.progress[i];
        p.started_ms.get_or_insert(now);
        p.status = LevelStatus::Active;
    }
    Ok(Json(level_state(&state.levels, &name, &s.progress[i], now)))
}

/// An attempt must place exactly one tool, so every field is required.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttemptBody {
    tool: usize,
    x: f64,
    y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttemptResponse {
    pub accepted: bool,
    pub attempt: usize,
    pub solved: bool,
    pub reward: f64,
    pub min_goal_distance: f64,
    pub remaining: f64,
    pub trajectory: TrajectoryDoc,
}

fn rejection(e: AttemptError) -> ApiError {
    match e {
        AttemptError::Rejected(r) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, &r.to_string(), format!("placement rejected: {r}")),
        AttemptError::BadTool(t) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "bad-tool", format!("tool index {t} out of range")),
        AttemptError::Physics(p) => ApiError::internal(p),
    }
}

/// Runs `action` on the pristine level with no noise.
pub fn run_attempt(level: &LevelSpec, action: &Action) -> Result<(vtools_core::level::AttemptOutcome, TrajectoryDoc), AttemptError> {
    level.validate_action(action)?;
    let outcome = level.attempt_recorded(Some(action), NoiseConfig::NONE, 0)?;
    let doc = TrajectoryDoc::from_trajectory(outcome.trajectory.as_ref().expect("recorded attempt"), DEFAULT_FRAME_STRIDE);
    Ok((outcome, doc))
}

async fn post_attempt(
    State(state): State<Arc<AppState>>,
    Path((id, name)): Path<(String, String)>,
    body: Bytes,
) -> Result<Json<AttemptResponse>, ApiError> {
    let session = state.session(&id).await?;
    // Held to the end: requests for one session are serialized.
    let mut s = session.lock().await;
    let now = state.clock.now_ms();
    s.refresh(&state.levels, now);
    let i = playable(&s, &name)?;
    let req: AttemptBody = parse_body(&body)?;
    let action = Action::new(req.tool, req.x, req.y);
    if !(action.position.x.is_finite() && action.position.y.is_finite()) {
        return Err(ApiError::bad_request("coordinates must be finite"));
    }

    let started = *s.progress[i].started_ms.get_or_insert(now);
    s.progress[i].status = LevelStatus::Active;
    let attempt = s.progress[i].attempts + 1;
    let st = state.clone();
    let (session_id, level_name) = (s.id.clone(), name.clone());
    let (record, doc) = tokio::task::spawn_blocking(move || -> Result<(AttemptRecord, TrajectoryDoc), ApiError> {
        let level = &st.levels.get(&level_name).expect("session levels exist").spec;
        let (outcome, doc) = run_attempt(level, &action).map_err(rejection)?;
        let trajectory = st.store.write_trajectory(&session_id, &level_name, attempt, &doc.to_json()).map_err(ApiError::internal)?;
        let record = AttemptRecord {
            session: session_id,
            level: level_name,
            attempt,
            timestamp_ms: now,
            elapsed: elapsed_s(started, now),
            action,
            solved: outcome.solved,
            reward: outcome.reward,
            min_goal_distance: outcome.min_goal_distance,
            trajectory,
        };
        st.store.append_attempt(&record).map_err(ApiError::internal)?;
        Ok((record, doc))
    })
    .await
    .map_err(ApiError::internal)??;

    let p = &mut s.progress[i];
    p.attempts = attempt;
    if record.solved {
        p.status = LevelStatus::Solved;
    }
    let remaining = level_state(&state.levels, &name, p, now).remaining;
    Ok(Json(AttemptResponse {
        accepted: true,
        attempt,
        solved: record.solved,
        reward: record.reward,
        min_goal_distance: record.min_goal_distance,
        remaining,
        trajectory: doc,
    }))
}

async fn session_log(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Vec<AttemptRecord>>, ApiError> {
    state.session(&id).await?;
    state.store.read_log(&id).map(Json).map_err(ApiError::internal)
}

/// A logged attempt whose replay disagrees with what was stored.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayMismatch {
    pub level: String,
    pub attempt: usize,
    pub detail: String,
}

/// Re-runs every logged attempt and reports any whose solved flag or goal
/// distance differs from the record.
pub fn replay(levels: &LevelStore, records: &[AttemptRecord]) -> Vec<ReplayMismatch> {
    records
        .iter()
        .filter_map(|r| {
            let miss = |detail: String| Some(ReplayMismatch { level: r.level.clone(), attempt: r.attempt, detail });
            let Some(level) = levels.get(&r.level) else {
                return miss("level not available".into());
            };
            match level.spec.attempt(Some(&r.action), NoiseConfig::NONE, 0) {
                Err(e) => miss(e.to_string()),
                Ok(o) if o.solved != r.solved || o.min_goal_distance.to_bits() != r.min_goal_distance.to_bits() => miss(format!(
                    "stored solved={} distance={}, replay solved={} distance={}",
                    r.solved, r.min_goal_distance, o.solved, o.min_goal_distance
                )),
                Ok(_) => None,
            }
        })
        .collect()
}

/// Serves `state` on `addr` until ctrl-c.
pub async fn serve(state: Arc<AppState>, addr: std::net::SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
