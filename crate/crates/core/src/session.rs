//! Interaction logs and the four learning-strategy trace indicators.
//!
//! A log is an append-only list of timestamped events. Persisted, it is
//! newline-delimited JSON: a header line naming the session and its
//! condition, then one `{"t", "kind", "payload"}` record per event.
//!
//! Indicators:
//! - organizing: stretches without code changes that last at least 30 s
//!   and contain preview interaction. A stretch runs from the previous
//!   program change (or session start) to the last event before the next
//!   program change.
//! - elaborating: active task time, as the union of 5 s buckets that hold
//!   at least one event while a task is open.
//! - planning: per task, time from the previous task's completion (or
//!   session start) to the first program change after the task started.
//! - monitoring: number of simulation runs started.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SNAPSHOT_INTERVAL_MS: u64 = 5_000;
pub const ORGANIZING_THRESHOLD_MS: u64 = 30_000;
pub const ACTIVITY_BUCKET_MS: u64 = 5_000;

/// Which mapping aids a session may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub highlights: bool,
    #[serde(rename = "dynamicLinking")]
    pub dynamic_linking: bool,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition { highlights: false, dynamic_linking: false },
        Condition { highlights: true, dynamic_linking: false },
        Condition { highlights: false, dynamic_linking: true },
        Condition { highlights: true, dynamic_linking: true },
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum PreviewAction {
    Orbit,
    Zoom,
    DragMarker,
    SelectWaypoint,
    DragWaypoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum EventKind {
    ProgramChanged {
        source: String,
    },
    PreviewInteraction {
        sub: PreviewAction,
    },
    HighlightQueried {
        #[serde(rename = "waypointIndex")]
        waypoint_index: usize,
    },
    EditApplied {
        status: String,
    },
    SimulationStarted {},
    SimulationFinished {},
    TaskStarted {
        #[serde(rename = "taskId")]
        task_id: String,
    },
    TaskCompleted {
        #[serde(rename = "taskId")]
        task_id: String,
    },
    Snapshot {
        source: String,
    },
    ManualSave {
        source: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionEvent {
    /// Milliseconds since session start.
    pub t: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

impl SessionEvent {
    pub fn new(t: u64, kind: EventKind) -> Self {
        Self { t, kind }
    }
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("event at t={got} recorded after t={last}")]
    OutOfOrderTimestamp { last: u64, got: u64 },
    #[error("malformed log: {0}")]
    MalformedLog(String),
    #[error("log line {line}: {source}")]
    Decode { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct LogHeader {
    t: u64,
    kind: String,
    payload: HeaderPayload,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct HeaderPayload {
    #[serde(rename = "sessionId")]
    session_id: String,
    condition: Condition,
}

const HEADER_KIND: &str = "SessionCreated";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionLog {
    pub session_id: String,
    pub condition: Condition,
    events: Vec<SessionEvent>,
}

impl SessionLog {
    pub fn new(session_id: impl Into<String>, condition: Condition) -> Self {
        Self { session_id: session_id.into(), condition, events: Vec::new() }
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn last_t(&self) -> Option<u64> {
        self.events.last().map(|e| e.t)
    }

    pub fn record(&mut self, event: SessionEvent) -> Result<(), SessionError> {
        if let Some(last) = self.last_t() {
            if event.t < last {
                return Err(SessionError::OutOfOrderTimestamp { last, got: event.t });
            }
        }
        self.events.push(event);
        Ok(())
    }

    pub fn header_line(&self) -> String {
        let header = LogHeader {
            t: 0,
            kind: HEADER_KIND.to_string(),
            payload: HeaderPayload { session_id: self.session_id.clone(), condition: self.condition },
        };
        serde_json::to_string(&header).expect("header serializes")
    }

    pub fn event_line(event: &SessionEvent) -> String {
        serde_json::to_string(event).expect("event serializes")
    }

    pub fn to_ndjson(&self) -> String {
        let mut out = self.header_line();
        out.push('\n');
        for e in &self.events {
            out.push_str(&Self::event_line(e));
            out.push('\n');
        }
        out
    }

    pub fn from_ndjson(text: &str) -> Result<SessionLog, SessionError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, first) = lines.next().ok_or_else(|| SessionError::MalformedLog("empty log".into()))?;
        let header: LogHeader =
            serde_json::from_str(first).map_err(|source| SessionError::Decode { line: 1, source })?;
        if header.kind != HEADER_KIND {
            return Err(SessionError::MalformedLog(format!("first record must be {HEADER_KIND}")));
        }
        let mut log = SessionLog::new(header.payload.session_id, header.payload.condition);
        for (i, line) in lines {
            let event = serde_json::from_str(line).map_err(|source| SessionError::Decode { line: i + 1, source })?;
            log.record(event)?;
        }
        Ok(log)
    }

    /// File name used for persistence: `<sessionId>.log`.
    pub fn file_name(&self) -> String {
        format!("{}.log", self.session_id)
    }

    pub fn save(&self, dir: &Path) -> Result<std::path::PathBuf, SessionError> {
        let path = dir.join(self.file_name());
        fs::write(&path, self.to_ndjson())?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<SessionLog, SessionError> {
        Self::from_ndjson(&fs::read_to_string(path)?)
    }

    /// The program text as of the last `ProgramChanged` event.
    pub fn replay_source(&self) -> Option<&str> {
        self.events.iter().rev().find_map(|e| match &e.kind {
            EventKind::ProgramChanged { source } => Some(source.as_str()),
            _ => None,
        })
    }
}

/// Whether a state snapshot should be taken at `now` (ms).
pub fn snapshot_due(log: &SessionLog, now: u64) -> bool {
    let last = log.events().iter().rev().find_map(|e| match e.kind {
        EventKind::Snapshot { .. } | EventKind::ProgramChanged { .. } => Some(e.t),
        _ => None,
    });
    match last {
        None => true,
        Some(t) => now.saturating_sub(t) >= SNAPSHOT_INTERVAL_MS,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyTraceReport {
    #[serde(rename = "organizingEpisodes")]
    pub organizing_episodes: usize,
    #[serde(rename = "organizingSeconds")]
    pub organizing_seconds: f64,
    #[serde(rename = "elaboratingSeconds")]
    pub elaborating_seconds: f64,
    #[serde(rename = "planningSeconds")]
    pub planning_seconds: BTreeMap<String, f64>,
    #[serde(rename = "monitoringCount")]
    pub monitoring_count: usize,
}

#[derive(Debug, Clone)]
struct TaskWindow {
    id: String,
    start_idx: usize,
    start: u64,
    end: Option<u64>,
}

fn task_windows(events: &[SessionEvent]) -> Result<Vec<TaskWindow>, SessionError> {
    let mut windows: Vec<TaskWindow> = Vec::new();
    let mut open: Option<usize> = None;
    for (i, e) in events.iter().enumerate() {
        match &e.kind {
            EventKind::TaskStarted { task_id } => {
                if let Some(w) = open {
                    return Err(SessionError::MalformedLog(format!(
                        "task {task_id:?} started at t={} while {:?} is still open",
                        e.t, windows[w].id
                    )));
                }
                open = Some(windows.len());
                windows.push(TaskWindow { id: task_id.clone(), start_idx: i, start: e.t, end: None });
            }
            EventKind::TaskCompleted { task_id } => match open.take() {
                Some(w) if windows[w].id == *task_id => windows[w].end = Some(e.t),
                _ => {
                    return Err(SessionError::MalformedLog(format!(
                        "task {task_id:?} completed at t={} without being started",
                        e.t
                    )))
                }
            },
            _ => {}
        }
    }
    Ok(windows)
}

pub fn compute_traces(log: &SessionLog) -> Result<StrategyTraceReport, SessionError> {
    let events = log.events();
    if events.windows(2).any(|w| w[1].t < w[0].t) {
        return Err(SessionError::MalformedLog("timestamps decrease".into()));
    }
    let windows = task_windows(events)?;
    let log_end = log.last_t().unwrap_or(0);

    // Organizing: split the timeline at program changes.
    let mut episodes = 0;
    let mut organizing_ms = 0u64;
    let mut seg_start = 0u64;
    let mut seg_last: Option<u64> = None;
    let mut seg_preview = false;
    let mut close_segment = |start: u64, last: Option<u64>, preview: bool| {
        if let Some(last) = last {
            let len = last - start;
            if preview && len >= ORGANIZING_THRESHOLD_MS {
                episodes += 1;
                organizing_ms += len;
            }
        }
    };
    for e in events {
        if let EventKind::ProgramChanged { .. } = e.kind {
            close_segment(seg_start, seg_last, seg_preview);
            seg_start = e.t;
            seg_last = None;
            seg_preview = false;
        } else {
            seg_last = Some(e.t);
            seg_preview |= matches!(e.kind, EventKind::PreviewInteraction { .. });
        }
    }
    close_segment(seg_start, seg_last, seg_preview);

    // Elaborating: 5 s buckets holding any event inside an open task.
    let mut buckets = BTreeSet::new();
    for e in events {
        let inside = windows.iter().any(|w| e.t >= w.start && e.t <= w.end.unwrap_or(log_end));
        if inside {
            buckets.insert(e.t / ACTIVITY_BUCKET_MS);
        }
    }

    // Planning.
    let mut planning_seconds: BTreeMap<String, f64> = BTreeMap::new();
    let mut prev_end = 0u64;
    for w in &windows {
        let task_end = w.end.unwrap_or(log_end);
        let first_change = events[w.start_idx..]
            .iter()
            .take_while(|e| e.t <= task_end)
            .find(|e| matches!(e.kind, EventKind::ProgramChanged { .. }))
            .map_or(task_end, |e| e.t);
        let ms = first_change.saturating_sub(prev_end);
        *planning_seconds.entry(w.id.clone()).or_default() += ms as f64 / 1000.0;
        prev_end = task_end;
    }

    Ok(StrategyTraceReport {
        organizing_episodes: episodes,
        organizing_seconds: organizing_ms as f64 / 1000.0,
        elaborating_seconds: (buckets.len() as u64 * ACTIVITY_BUCKET_MS) as f64 / 1000.0,
        planning_seconds,
        monitoring_count: events.iter().filter(|e| matches!(e.kind, EventKind::SimulationStarted {})).count(),
    })
}
