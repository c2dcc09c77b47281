//! Live mission programming with source location tracking.
//!
//! Programs written in MissionScript are evaluated into quadcopter waypoints
//! where every coordinate carries a trace back to the literals that produced
//! it. On top of that sit highlighting and drag-to-edit ([`linkage`]),
//! trajectory simulation ([`sim`]), rubric grading ([`grading`]),
//! interaction logs with learning-strategy metrics ([`session`]) and the
//! message-level session server ([`server`]).

pub mod dsl;
pub mod eval;
pub mod grading;
pub mod linkage;
pub mod server;
pub mod session;
pub mod sim;

pub use dsl::{apply_rewrites, parse, tokenize, LiteralRewrite, Program, SourceSpan};
pub use eval::{evaluate, literal_leaves, Axis, Limits, MarkerId, MarkerSet, MissionResult, Pose, TrackedValue, Waypoint};
pub use linkage::{apply_edit, highlight, solve_edit, EditProposal, EditRequest, EditStatus, HighlightResult};
pub use grading::{builtin_rubrics, grade, GradeReport, Rubric};
pub use server::{randomize_condition, Request, Response, SessionState};
pub use session::{compute_traces, snapshot_due, Condition, EventKind, SessionEvent, SessionLog, StrategyTraceReport};
pub use sim::{build_geometry, SimParams, SimState, TrajectoryGeometry};
