//! HTTP and websocket transport for the session server.
//!
//! `/session` is a websocket carrying `{type, payload}` documents. The first
//! request on a fresh connection must be `CreateSession` (or the connection
//! can resume an existing session with `/session?resume=<id>`). While a
//! simulation runs the server pushes `SimFrame` messages on its own.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;

use hoverlink_core::server::{ErrorCode, MissionInfo};
use hoverlink_core::sim::Phase;
use hoverlink_core::{
    evaluate, grade, parse, randomize_condition, Condition, Limits, MarkerSet, MissionResult, Request, Response,
    Rubric, SessionLog, SessionState,
};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub rubrics: BTreeMap<String, Rubric>,
    pub seed: Option<u64>,
    pub log_dir: PathBuf,
    /// Wall-clock gap between pushed simulation frames.
    pub frame_interval: Duration,
    /// Simulated seconds per wall-clock second.
    pub time_scale: f64,
}

impl ServerConfig {
    pub fn new(rubrics: BTreeMap<String, Rubric>, log_dir: impl Into<PathBuf>) -> Self {
        Self {
            rubrics,
            seed: None,
            log_dir: log_dir.into(),
            frame_interval: Duration::from_millis(50),
            time_scale: 1.0,
        }
    }
}

pub struct LiveSession {
    pub state: SessionState,
    started: Instant,
    persisted: usize,
    log_path: PathBuf,
}

impl LiveSession {
    fn now(&self) -> u64 {
        self.started.elapsed().as_millis() as u64
    }

    /// Appends events not yet written to the session's log file.
    fn persist(&mut self) -> std::io::Result<()> {
        let events = self.state.log().events();
        if self.persisted == events.len() {
            return Ok(());
        }
        let mut file = OpenOptions::new().append(true).open(&self.log_path)?;
        let mut buf = String::new();
        for e in &events[self.persisted..] {
            buf.push_str(&SessionLog::event_line(e));
            buf.push('\n');
        }
        file.write_all(buf.as_bytes())?;
        self.persisted = events.len();
        Ok(())
    }

    fn handle(&mut self, request: Request) -> Response {
        let now = self.now();
        let reply = self.state.handle(request, now);
        if let Err(e) = self.persist() {
            tracing::warn!(session = %self.state.session_id, "cannot write log: {e}");
        }
        reply
    }

    fn simulating(&self) -> bool {
        self.state.sim_state().is_some_and(|s| s.phase != Phase::Done)
    }
}

type Shared = Arc<tokio::sync::Mutex<LiveSession>>;

pub struct AppState {
    config: ServerConfig,
    rubrics: Arc<BTreeMap<String, Rubric>>,
    sessions: Mutex<HashMap<String, Shared>>,
    created: AtomicU64,
}

impl AppState {
    pub fn new(config: ServerConfig) -> anyhow::Result<Arc<Self>> {
        fs::create_dir_all(&config.log_dir)
            .with_context(|| format!("cannot create log directory {}", config.log_dir.display()))?;
        Ok(Arc::new(Self {
            rubrics: Arc::new(config.rubrics.clone()),
            config,
            sessions: Mutex::new(HashMap::new()),
            created: AtomicU64::new(0),
        }))
    }

    /// Opens a new session. Without an explicit condition one is drawn at
    /// random; a server seed makes the k-th session's draw reproducible.
    pub fn create_session(&self, condition: Option<Condition>, seed: Option<u64>) -> std::io::Result<(String, Shared)> {
        let k = self.created.fetch_add(1, Ordering::SeqCst);
        let seed = seed.or(self.config.seed.map(|s| s.wrapping_add(k)));
        let condition = condition.unwrap_or_else(|| randomize_condition(seed));
        let id = match self.config.seed {
            Some(s) => format!("s{s}-{k}"),
            None => {
                let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos());
                format!("{:x}-{k}", nanos)
            }
        };
        let state = SessionState::new(id.clone(), condition, self.rubrics.clone());
        let log_path = self.config.log_dir.join(state.log().file_name());
        fs::write(&log_path, format!("{}\n", state.log().header_line()))?;
        let live = Arc::new(tokio::sync::Mutex::new(LiveSession { state, started: Instant::now(), persisted: 0, log_path }));
        self.sessions.lock().expect("session table").insert(id.clone(), live.clone());
        tracing::info!(session = %id, ?condition, "session created");
        Ok((id, live))
    }

    pub fn session(&self, id: &str) -> Option<Shared> {
        self.sessions.lock().expect("session table").get(id).cloned()
    }

    fn missions(&self) -> Vec<MissionInfo> {
        self.rubrics
            .values()
            .map(|r| MissionInfo {
                task_id: r.mission_id.clone(),
                title: r.title.clone(),
                instruction: r.instruction.clone(),
                provisional: r.provisional,
            })
            .collect()
    }
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/session", get(session_socket))
        .route("/session/{id}/log", get(session_log))
        .route("/rubrics/{task}", get(rubric))
        .route("/missions", get(missions))
        .route("/missions/{task}", get(mission_text))
        .route("/grade", post(grade_source))
        .with_state(app)
}

pub async fn serve(listener: TcpListener, app: Arc<AppState>) -> anyhow::Result<()> {
    axum::serve(listener, router(app)).await?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    code: ErrorCode,
    message: String,
}

fn not_found(code: ErrorCode, message: String) -> axum::response::Response {
    (StatusCode::NOT_FOUND, Json(ErrorBody { code, message })).into_response()
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

async fn session_log(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> axum::response::Response {
    let text = match app.session(&id) {
        Some(live) => Some(live.lock().await.state.log().to_ndjson()),
        None if valid_id(&id) => fs::read_to_string(app.config.log_dir.join(format!("{id}.log"))).ok(),
        None => None,
    };
    match text {
        Some(body) => ([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response(),
        None => not_found(ErrorCode::InvalidRequest, format!("no session {id:?}")),
    }
}

async fn rubric(State(app): State<Arc<AppState>>, UrlPath(task): UrlPath<String>) -> axum::response::Response {
    match app.rubrics.get(&task) {
        Some(r) => Json(r.clone()).into_response(),
        None => not_found(ErrorCode::UnknownTask, format!("no rubric for task {task:?}")),
    }
}

async fn missions(State(app): State<Arc<AppState>>) -> Json<Vec<MissionInfo>> {
    Json(app.missions())
}

async fn mission_text(State(app): State<Arc<AppState>>, UrlPath(task): UrlPath<String>) -> axum::response::Response {
    match app.rubrics.get(&task) {
        Some(r) => ([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], r.instruction.clone()).into_response(),
        None => not_found(ErrorCode::UnknownTask, format!("no mission {task:?}")),
    }
}

#[derive(Debug, Deserialize)]
struct GradeBody {
    #[serde(rename = "taskId")]
    task_id: String,
    source: String,
}

async fn grade_source(State(app): State<Arc<AppState>>, Json(body): Json<GradeBody>) -> axum::response::Response {
    let Some(rubric) = app.rubrics.get(&body.task_id) else {
        return not_found(ErrorCode::UnknownTask, format!("no rubric for task {:?}", body.task_id));
    };
    let result = match parse(&body.source) {
        Ok(p) => evaluate(&p, &MarkerSet::default(), Limits::default()),
        Err(_) => MissionResult::default(),
    };
    Json(grade(&result, rubric)).into_response()
}

#[derive(Debug, Deserialize)]
struct SocketQuery {
    resume: Option<String>,
}

async fn session_socket(
    ws: WebSocketUpgrade,
    State(app): State<Arc<AppState>>,
    Query(query): Query<SocketQuery>,
) -> axum::response::Response {
    ws.on_upgrade(move |socket| run_socket(socket, app, query.resume))
}

async fn send(socket: &mut WebSocket, reply: &Response) -> bool {
    let text = serde_json::to_string(reply).expect("responses serialize");
    socket.send(Message::Text(text.into())).await.is_ok()
}

async fn run_socket(mut socket: WebSocket, app: Arc<AppState>, resume: Option<String>) {
    let mut session: Option<Shared> = None;
    if let Some(id) = resume {
        match app.session(&id) {
            Some(live) => {
                let info = live.lock().await.state.info();
                session = Some(live);
                if !send(&mut socket, &info).await {
                    return;
                }
            }
            None => {
                let reply = Response::error(ErrorCode::InvalidRequest, format!("no session {id:?} to resume"));
                send(&mut socket, &reply).await;
                return;
            }
        }
    }

    let mut frames = tokio::time::interval(app.config.frame_interval);
    let mut housekeeping = tokio::time::interval(Duration::from_millis(500));
    let frame_dt = app.config.frame_interval.as_secs_f64() * app.config.time_scale;
    let mut simulating = false;

    loop {
        tokio::select! {
            incoming = socket.recv() => {
                let text = match incoming {
                    Some(Ok(Message::Text(t))) => t,
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                let current = session.clone();
                let reply = match (serde_json::from_str::<Request>(&text), current) {
                    (Err(e), _) => Response::error(ErrorCode::InvalidRequest, format!("cannot decode message: {e}")),
                    (Ok(Request::CreateSession { condition, seed }), None) => match app.create_session(condition, seed) {
                        Ok((_, live)) => {
                            let info = live.lock().await.state.info();
                            session = Some(live);
                            info
                        }
                        Err(e) => Response::error(ErrorCode::InvalidRequest, format!("cannot open session log: {e}")),
                    },
                    (Ok(_), None) => Response::error(ErrorCode::InvalidRequest, "send CreateSession first"),
                    (Ok(request), Some(live)) => {
                        let mut live = live.lock().await;
                        let reply = live.handle(request);
                        simulating = live.simulating();
                        reply
                    }
                };
                if !send(&mut socket, &reply).await {
                    break;
                }
            }
            _ = frames.tick(), if simulating => {
                let Some(live) = &session else { continue };
                let frame = {
                    let mut live = live.lock().await;
                    let now = live.now();
                    let frame = live.state.advance_simulation(frame_dt, now).ok().flatten();
                    if let Err(e) = live.persist() {
                        tracing::warn!("cannot write log: {e}");
                    }
                    simulating = live.simulating();
                    frame
                };
                if let Some(frame) = frame {
                    if !send(&mut socket, &Response::SimFrame(frame)).await {
                        break;
                    }
                }
            }
            _ = housekeeping.tick(), if session.is_some() => {
                let Some(live) = &session else { continue };
                let mut live = live.lock().await;
                let now = live.now();
                if live.state.tick(now).is_ok() {
                    let _ = live.persist();
                }
            }
        }
    }
}

/// Reads a log file written by the server.
pub fn load_log(path: &Path) -> anyhow::Result<SessionLog> {
    SessionLog::load(path).with_context(|| format!("cannot load session log {}", path.display()))
}
