//! Transport-independent session server: protocol messages and the
//! per-session state machine behind them.
//!
//! Every request yields exactly one response. Each request that changes
//! session state appends the matching event to the session log.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsl::{parse, Program, SourceSpan, SyntaxError};
use crate::eval::{evaluate, ConsoleLine, Limits, MarkerId, MarkerSet, MissionResult, Pose};
use crate::grading::{grade, GradeReport, Rubric};
use crate::linkage::{
    apply_edit, highlight, solve_edit, EditRequest, EditStatus, LinkError, DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE,
};
use crate::dsl::LiteralRewrite;
use crate::session::{snapshot_due, Condition, EventKind, PreviewAction, SessionError, SessionEvent, SessionLog};
use crate::sim::{self, build_geometry, Arrival, Phase, SimParams, SimState, TrajectoryGeometry};

/// Picks one of the four conditions uniformly. A seed makes the draw reproducible.
pub fn randomize_condition(seed: Option<u64>) -> Condition {
    let idx = match seed {
        Some(s) => ChaCha8Rng::seed_from_u64(s).gen_range(0..4),
        None => rand::thread_rng().gen_range(0..4),
    };
    Condition::ALL[idx]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum TaskBoundary {
    Start,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload")]
pub enum Request {
    CreateSession {
        #[serde(default)]
        condition: Option<Condition>,
        #[serde(default)]
        seed: Option<u64>,
    },
    SetProgram {
        source: String,
    },
    QueryHighlight {
        #[serde(rename = "waypointIndex")]
        waypoint_index: usize,
        #[serde(default)]
        axes: Vec<crate::eval::Axis>,
    },
    ApplyPreviewEdit(EditRequest),
    DragMarker {
        id: MarkerId,
        pose: Pose,
    },
    PreviewGesture {
        sub: PreviewAction,
    },
    RunSimulation {
        #[serde(default)]
        params: Option<SimParams>,
    },
    SimTickRequest {
        dt: f64,
    },
    GradeMission {
        #[serde(rename = "taskId")]
        task_id: String,
    },
    TaskBoundary {
        boundary: TaskBoundary,
        #[serde(rename = "taskId")]
        task_id: String,
    },
    SaveSession {},
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorCode {
    FeatureDisabled,
    UnknownTask,
    NoActiveSimulation,
    UnknownWaypoint,
    ProgramHasErrors,
    InvalidRequest,
    OutOfOrderTimestamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub span: SourceSpan,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionInfo {
    #[serde(rename = "taskId")]
    pub task_id: String,
    pub title: String,
    pub instruction: String,
    pub provisional: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgramState {
    pub source: String,
    /// Geometry of the last program that evaluated without front-end errors.
    pub geometry: TrajectoryGeometry,
    pub console: Vec<ConsoleLine>,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimFrame {
    pub clock: f64,
    pub pose: Pose,
    pub phase: Phase,
    pub arrivals: Vec<Arrival>,
}

impl From<&SimState> for SimFrame {
    fn from(s: &SimState) -> Self {
        Self { clock: s.clock, pose: s.pose, phase: s.phase, arrivals: s.arrivals.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "payload")]
pub enum Response {
    SessionInfo {
        #[serde(rename = "sessionId")]
        session_id: String,
        condition: Condition,
        missions: Vec<MissionInfo>,
    },
    ProgramState(ProgramState),
    HighlightResponse {
        #[serde(rename = "waypointIndex")]
        waypoint_index: usize,
        spans: Vec<SourceSpan>,
    },
    EditResponse {
        #[serde(flatten)]
        status: EditStatus,
        rewrites: Vec<LiteralRewrite>,
        iterations: u32,
        program: ProgramState,
    },
    SimFrame(SimFrame),
    GradeResponse(GradeReport),
    Ack {},
    Error {
        code: ErrorCode,
        message: String,
    },
}

impl Response {
    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        Response::Error { code, message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Response::Error { .. })
    }

    pub fn error_code(&self) -> Option<ErrorCode> {
        match self {
            Response::Error { code, .. } => Some(*code),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
struct ActiveSim {
    result: MissionResult,
    state: SimState,
}

#[derive(Debug, Clone)]
pub struct SessionState {
    pub session_id: String,
    pub condition: Condition,
    pub markers: MarkerSet,
    pub limits: Limits,
    source: String,
    program: Option<Program>,
    result: MissionResult,
    diagnostics: Vec<Diagnostic>,
    last_valid_geometry: TrajectoryGeometry,
    sim: Option<ActiveSim>,
    sim_finished_logged: bool,
    log: SessionLog,
    rubrics: Arc<BTreeMap<String, Rubric>>,
}

fn syntax_diagnostic(e: &SyntaxError) -> Diagnostic {
    let kind = match e {
        SyntaxError::Lex(_) => "lex",
        SyntaxError::Parse(_) => "parse",
    };
    Diagnostic { span: e.span(), kind: kind.into(), message: e.to_string() }
}

impl SessionState {
    pub fn new(session_id: impl Into<String>, condition: Condition, rubrics: Arc<BTreeMap<String, Rubric>>) -> Self {
        let session_id = session_id.into();
        Self {
            log: SessionLog::new(session_id.clone(), condition),
            session_id,
            condition,
            markers: MarkerSet::default(),
            limits: Limits::default(),
            source: String::new(),
            program: Some(Program::default()),
            result: MissionResult::default(),
            diagnostics: Vec::new(),
            last_valid_geometry: TrajectoryGeometry::default(),
            sim: None,
            sim_finished_logged: false,
            rubrics,
        }
    }

    pub fn log(&self) -> &SessionLog {
        &self.log
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn result(&self) -> &MissionResult {
        &self.result
    }

    pub fn info(&self) -> Response {
        Response::SessionInfo {
            session_id: self.session_id.clone(),
            condition: self.condition,
            missions: self
                .rubrics
                .values()
                .map(|r| MissionInfo {
                    task_id: r.mission_id.clone(),
                    title: r.title.clone(),
                    instruction: r.instruction.clone(),
                    provisional: r.provisional,
                })
                .collect(),
        }
    }

    pub fn program_state(&self) -> ProgramState {
        ProgramState {
            source: self.source.clone(),
            geometry: self.last_valid_geometry.clone(),
            console: self.result.console.clone(),
            diagnostics: self.diagnostics.clone(),
        }
    }

    pub fn sim_state(&self) -> Option<&SimState> {
        self.sim.as_ref().map(|s| &s.state)
    }

    fn record(&mut self, now: u64, kind: EventKind) -> Result<(), SessionError> {
        self.log.record(SessionEvent::new(now, kind))
    }

    /// Records a snapshot when one is due. Transports call this on a timer.
    pub fn tick(&mut self, now: u64) -> Result<bool, SessionError> {
        if snapshot_due(&self.log, now) {
            self.record(now, EventKind::Snapshot { source: self.source.clone() })?;
            return Ok(true);
        }
        Ok(false)
    }

    fn reevaluate(&mut self) {
        self.diagnostics.clear();
        match parse(&self.source) {
            Ok(program) => {
                self.result = evaluate(&program, &self.markers, self.limits);
                self.diagnostics.extend(self.result.diagnostics.iter().map(|d| Diagnostic {
                    span: d.span,
                    kind: format!("runtime:{:?}", d.kind),
                    message: d.message.clone(),
                }));
                self.last_valid_geometry = build_geometry(&self.result);
                self.program = Some(program);
            }
            Err(e) => {
                self.diagnostics.push(syntax_diagnostic(&e));
                self.program = None;
                self.result = MissionResult::default();
            }
        }
    }

    pub fn handle(&mut self, request: Request, now: u64) -> Response {
        if let Some(last) = self.log.last_t() {
            if now < last {
                return Response::error(
                    ErrorCode::OutOfOrderTimestamp,
                    format!("request at t={now} is earlier than the last event at t={last}"),
                );
            }
        }
        let response = self.dispatch(request, now);
        if let Err(e) = self.tick(now) {
            return Response::error(ErrorCode::OutOfOrderTimestamp, e.to_string());
        }
        response
    }

    fn dispatch(&mut self, request: Request, now: u64) -> Response {
        match self.dispatch_inner(request, now) {
            Ok(r) => r,
            Err(e) => Response::error(ErrorCode::OutOfOrderTimestamp, e.to_string()),
        }
    }

    fn dispatch_inner(&mut self, request: Request, now: u64) -> Result<Response, SessionError> {
        Ok(match request {
            Request::CreateSession { .. } => {
                Response::error(ErrorCode::InvalidRequest, "session already exists")
            }
            Request::SetProgram { source } => {
                self.source = source;
                self.reevaluate();
                self.record(now, EventKind::ProgramChanged { source: self.source.clone() })?;
                Response::ProgramState(self.program_state())
            }
            Request::QueryHighlight { waypoint_index, axes } => {
                if !self.condition.highlights {
                    return Ok(Response::error(ErrorCode::FeatureDisabled, "highlights are disabled in this session"));
                }
                match highlight(&self.result, waypoint_index, &axes) {
                    Ok(h) => {
                        self.record(now, EventKind::HighlightQueried { waypoint_index })?;
                        Response::HighlightResponse { waypoint_index, spans: h.spans.into_iter().collect() }
                    }
                    Err(e) => link_error(e),
                }
            }
            Request::ApplyPreviewEdit(edit) => {
                if !self.condition.dynamic_linking {
                    return Ok(Response::error(ErrorCode::FeatureDisabled, "dynamic linking is disabled in this session"));
                }
                let Some(program) = self.program.as_ref().filter(|_| self.result.is_ok()) else {
                    return Ok(Response::error(ErrorCode::ProgramHasErrors, "fix the program before editing in the preview"));
                };
                let proposal = match solve_edit(program, &self.markers, &edit, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS) {
                    Ok(p) => p,
                    Err(e) => return Ok(link_error(e)),
                };
                self.record(now, EventKind::PreviewInteraction { sub: PreviewAction::DragWaypoint })?;
                self.record(now, EventKind::EditApplied { status: proposal.status.name().to_string() })?;
                if !matches!(proposal.status, EditStatus::Unsolvable { .. }) && !proposal.rewrites.is_empty() {
                    match apply_edit(&self.source, &proposal) {
                        Ok(new_source) => {
                            self.source = new_source;
                            self.reevaluate();
                            self.record(now, EventKind::ProgramChanged { source: self.source.clone() })?;
                        }
                        Err(e) => return Ok(link_error(e)),
                    }
                }
                Response::EditResponse {
                    status: proposal.status,
                    rewrites: proposal.rewrites,
                    iterations: proposal.iterations,
                    program: self.program_state(),
                }
            }
            Request::DragMarker { id, pose } => {
                if !pose.is_finite() {
                    return Ok(Response::error(ErrorCode::InvalidRequest, "marker pose must be finite"));
                }
                self.markers.set(id, pose).ok();
                if self.program.is_some() {
                    self.reevaluate();
                }
                self.record(now, EventKind::PreviewInteraction { sub: PreviewAction::DragMarker })?;
                Response::ProgramState(self.program_state())
            }
            Request::PreviewGesture { sub } => {
                self.record(now, EventKind::PreviewInteraction { sub })?;
                Response::Ack {}
            }
            Request::RunSimulation { params } => {
                let state = match sim::start(params.unwrap_or_default()) {
                    Ok(s) => s,
                    Err(e) => return Ok(Response::error(ErrorCode::InvalidRequest, e.to_string())),
                };
                self.sim = Some(ActiveSim { result: self.result.clone(), state });
                self.sim_finished_logged = false;
                self.record(now, EventKind::SimulationStarted {})?;
                Response::SimFrame(SimFrame::from(&self.sim.as_ref().expect("just set").state))
            }
            Request::SimTickRequest { dt } => match self.advance_simulation(dt, now)? {
                Some(frame) => Response::SimFrame(frame),
                None => Response::error(ErrorCode::NoActiveSimulation, "no simulation is running"),
            },
            Request::GradeMission { task_id } => match self.rubrics.get(&task_id) {
                Some(rubric) => Response::GradeResponse(grade(&self.result, rubric)),
                None => Response::error(ErrorCode::UnknownTask, format!("no rubric for task {task_id:?}")),
            },
            Request::TaskBoundary { boundary, task_id } => {
                if !self.rubrics.contains_key(&task_id) {
                    return Ok(Response::error(ErrorCode::UnknownTask, format!("no rubric for task {task_id:?}")));
                }
                let open = self.open_task();
                match boundary {
                    TaskBoundary::Start => {
                        if let Some(t) = open {
                            return Ok(Response::error(ErrorCode::InvalidRequest, format!("task {t:?} is still open")));
                        }
                        self.record(now, EventKind::TaskStarted { task_id })?;
                    }
                    TaskBoundary::Complete => {
                        if open.as_deref() != Some(task_id.as_str()) {
                            return Ok(Response::error(
                                ErrorCode::InvalidRequest,
                                format!("task {task_id:?} was not started"),
                            ));
                        }
                        self.record(now, EventKind::TaskCompleted { task_id })?;
                    }
                }
                Response::Ack {}
            }
            Request::SaveSession {} => {
                self.record(now, EventKind::ManualSave { source: self.source.clone() })?;
                Response::Ack {}
            }
        })
    }

    fn open_task(&self) -> Option<String> {
        let mut open = None;
        for e in self.log.events() {
            match &e.kind {
                EventKind::TaskStarted { task_id } => open = Some(task_id.clone()),
                EventKind::TaskCompleted { .. } => open = None,
                _ => {}
            }
        }
        open
    }

    /// Steps the running simulation and returns the new frame, or `None`
    /// when no simulation was started.
    pub fn advance_simulation(&mut self, dt: f64, now: u64) -> Result<Option<SimFrame>, SessionError> {
        let Some(active) = self.sim.as_mut() else {
            return Ok(None);
        };
        active.state = sim::step(&active.state, &active.result, dt);
        let frame = SimFrame::from(&active.state);
        if active.state.phase == Phase::Done && !self.sim_finished_logged {
            self.sim_finished_logged = true;
            self.record(now, EventKind::SimulationFinished {})?;
        }
        Ok(Some(frame))
    }
}

fn link_error(e: LinkError) -> Response {
    let code = match e {
        LinkError::UnknownWaypoint { .. } => ErrorCode::UnknownWaypoint,
        LinkError::ProgramHasErrors(_) => ErrorCode::ProgramHasErrors,
        _ => ErrorCode::InvalidRequest,
    };
    Response::error(code, e.to_string())
}
