//! Evaluation of mission programs with source location tracking.

mod interp;
pub mod markers;
pub mod trace;

pub use interp::{
    evaluate, evaluate_with_overrides, ConsoleLine, Limits, MissionResult, RuntimeError, RuntimeErrorKind, SleepItem,
    Waypoint, DEFAULT_MAX_STEPS,
};
pub use markers::{Axis, MarkerId, MarkerSet, Pose};
pub use trace::{external_leaves, literal_leaves, ArithOp, Trace, TraceNode, TrackedValue};
