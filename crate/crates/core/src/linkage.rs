//! The two code/preview mapping aids: highlighting the literals behind a
//! waypoint, and turning a dragged waypoint back into literal rewrites.
//!
//! Back-solving walks a single path down a coordinate's trace. At each
//! binary node one operand is chosen and the target is inverted around the
//! other operand's recorded value, until a literal leaf is reached. When a
//! literal feeds a coordinate more than once (`a + a`) the first guess is
//! off; the solver then re-evaluates and refines that literal with secant
//! steps, which lands exactly after one correction when the dependence is
//! linear.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{apply_rewrites, LiteralRewrite, Program, RewriteError, SourceSpan};
use crate::eval::{
    evaluate, evaluate_with_overrides, literal_leaves, ArithOp, Axis, Limits, MarkerSet, MissionResult, TraceNode,
};

pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: u32 = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinkError {
    #[error("waypoint {index} does not exist ({count} waypoints)")]
    UnknownWaypoint { index: usize, count: usize },
    #[error("invalid edit request: {0}")]
    InvalidRequest(String),
    #[error("program does not evaluate cleanly: {0}")]
    ProgramHasErrors(String),
    #[error("proposal is not applicable: {0}")]
    NotApplicable(String),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighlightResult {
    #[serde(rename = "waypointIndex")]
    pub waypoint_index: usize,
    pub axes: Vec<Axis>,
    pub spans: BTreeSet<SourceSpan>,
}

/// Union of the literal spans feeding the selected axes of one waypoint.
/// An empty axis list means all four axes.
pub fn highlight(result: &MissionResult, waypoint_index: usize, axes: &[Axis]) -> Result<HighlightResult, LinkError> {
    let wp = result
        .waypoints
        .get(waypoint_index)
        .ok_or(LinkError::UnknownWaypoint { index: waypoint_index, count: result.waypoints.len() })?;
    let mut axes: Vec<Axis> = if axes.is_empty() { Axis::ALL.to_vec() } else { axes.to_vec() };
    axes.sort();
    axes.dedup();
    let spans = axes.iter().flat_map(|a| literal_leaves(&wp.axis(*a).trace)).collect();
    Ok(HighlightResult { waypoint_index, axes, spans })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditRequest {
    #[serde(rename = "waypointIndex")]
    pub waypoint_index: usize,
    pub targets: BTreeMap<Axis, f64>,
}

impl EditRequest {
    pub fn single(waypoint_index: usize, axis: Axis, target: f64) -> Self {
        Self { waypoint_index, targets: BTreeMap::from([(axis, target)]) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum UnsolvableReason {
    /// Only marker reads or loop counters feed the axis.
    NoSolvableLiteral { axis: Axis },
    /// Every candidate path multiplies or divides by zero.
    Singular { axis: Axis },
    /// The only usable literal was already claimed by an earlier axis.
    Conflict { axis: Axis, span: SourceSpan },
    /// A candidate rewrite made the program fail or drop the waypoint.
    EvaluationFailed { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum EditStatus {
    Exact,
    BestEffort { achieved: BTreeMap<Axis, f64> },
    Unsolvable { reason: UnsolvableReason },
}

impl EditStatus {
    pub fn name(&self) -> &'static str {
        match self {
            EditStatus::Exact => "Exact",
            EditStatus::BestEffort { .. } => "BestEffort",
            EditStatus::Unsolvable { .. } => "Unsolvable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditProposal {
    pub rewrites: Vec<LiteralRewrite>,
    #[serde(flatten)]
    pub status: EditStatus,
    pub iterations: u32,
}

impl EditProposal {
    fn unsolvable(reason: UnsolvableReason, iterations: u32) -> Self {
        Self { rewrites: Vec::new(), status: EditStatus::Unsolvable { reason }, iterations }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum PathFailure {
    NoLiteral,
    Singular,
    Blocked,
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

/// Pushes `target` down to one literal leaf, returning the value that leaf
/// would need. Leaves in `frozen` are treated as not editable.
fn back_solve(node: &TraceNode, target: f64, frozen: &HashMap<SourceSpan, f64>) -> Result<(SourceSpan, f64), PathFailure> {
    match node {
        TraceNode::Literal { span, .. } => {
            if frozen.contains_key(span) {
                Err(PathFailure::Blocked)
            } else {
                Ok((*span, target))
            }
        }
        TraceNode::Synthetic { .. } | TraceNode::External { .. } => Err(PathFailure::NoLiteral),
        TraceNode::Neg { child } => back_solve(child, -target, frozen),
        TraceNode::Binary { op, left, right, left_value, right_value } => {
            let mut failure = PathFailure::NoLiteral;
            for side in operand_order(left, right) {
                let (child, sub_target) = match side {
                    Side::Left => (left, invert_left(*op, target, *right_value)),
                    Side::Right => (right, invert_right(*op, target, *left_value)),
                };
                let Some(sub_target) = sub_target.filter(|t| t.is_finite()) else {
                    if !literal_leaves(child).is_empty() {
                        failure = failure.max(PathFailure::Singular);
                    }
                    continue;
                };
                match back_solve(child, sub_target, frozen) {
                    Ok(found) => return Ok(found),
                    Err(e) => failure = failure.max(e),
                }
            }
            Err(failure)
        }
    }
}

/// Solve `op(l, right) = target` for `l`.
fn invert_left(op: ArithOp, target: f64, right: f64) -> Option<f64> {
    match op {
        ArithOp::Add => Some(target - right),
        ArithOp::Sub => Some(target + right),
        ArithOp::Mul => (right != 0.0).then(|| target / right),
        ArithOp::Div => Some(target * right),
    }
}

/// Solve `op(left, r) = target` for `r`.
fn invert_right(op: ArithOp, target: f64, left: f64) -> Option<f64> {
    match op {
        ArithOp::Add => Some(target - left),
        ArithOp::Sub => Some(left - target),
        ArithOp::Mul => (left != 0.0).then(|| target / left),
        ArithOp::Div => (left != 0.0 && target != 0.0).then(|| left / target),
    }
}

/// Which operand to try first: the one fed by exactly one literal; otherwise
/// the one whose earliest literal comes first in the source (named constants
/// at the top of a program win over inline offsets).
fn operand_order(left: &TraceNode, right: &TraceNode) -> [Side; 2] {
    let l = literal_leaves(left);
    let r = literal_leaves(right);
    let (l_single, r_single) = (l.len() == 1, r.len() == 1);
    let right_first = if l_single != r_single {
        r_single
    } else {
        match (l.first(), r.first()) {
            (Some(a), Some(b)) => b.start < a.start,
            (None, Some(_)) => true,
            _ => false,
        }
    };
    if right_first {
        [Side::Right, Side::Left]
    } else {
        [Side::Left, Side::Right]
    }
}

struct AxisPlan {
    axis: Axis,
    target: f64,
    /// Literal this axis drives; `None` when it piggybacks on an earlier axis.
    span: Option<SourceSpan>,
    prev_value: f64,
    prev_achieved: f64,
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Proposes literal rewrites that move one waypoint to the requested
/// coordinates. The program itself is never modified.
pub fn solve_edit(
    program: &Program,
    markers: &MarkerSet,
    request: &EditRequest,
    tol: f64,
    max_iter: u32,
) -> Result<EditProposal, LinkError> {
    if request.targets.is_empty() {
        return Err(LinkError::InvalidRequest("no target axes".into()));
    }
    if let Some((axis, _)) = request.targets.iter().find(|(_, v)| !v.is_finite()) {
        return Err(LinkError::InvalidRequest(format!("target for {axis} is not finite")));
    }
    let limits = Limits::default();
    let base = evaluate(program, markers, limits);
    if let Some(diag) = base.diagnostics.first() {
        return Err(LinkError::ProgramHasErrors(diag.to_string()));
    }
    let wp = base
        .waypoints
        .get(request.waypoint_index)
        .ok_or(LinkError::UnknownWaypoint { index: request.waypoint_index, count: base.waypoints.len() })?;

    let originals: HashMap<SourceSpan, f64> = program.number_literals().into_iter().collect();
    let mut overrides: HashMap<SourceSpan, f64> = HashMap::new();
    let mut plans = Vec::new();

    for (&axis, &target) in &request.targets {
        let tracked = wp.axis(axis);
        if close(tracked.value, target, tol) {
            continue;
        }
        if literal_leaves(&tracked.trace).is_empty() {
            return Ok(EditProposal::unsolvable(UnsolvableReason::NoSolvableLiteral { axis }, 0));
        }
        match back_solve(&tracked.trace, target, &overrides) {
            Ok((span, value)) => {
                overrides.insert(span, value);
                plans.push(AxisPlan {
                    axis,
                    target,
                    span: Some(span),
                    prev_value: originals[&span],
                    prev_achieved: tracked.value,
                });
            }
            Err(PathFailure::Blocked) => {
                // Fine if the claimed literal already needs the same value.
                match back_solve(&tracked.trace, target, &HashMap::new()) {
                    Ok((span, value)) if overrides.get(&span).is_some_and(|v| close(*v, value, tol)) => {
                        plans.push(AxisPlan { axis, target, span: None, prev_value: value, prev_achieved: tracked.value });
                    }
                    Ok((span, _)) => {
                        return Ok(EditProposal::unsolvable(UnsolvableReason::Conflict { axis, span }, 0));
                    }
                    Err(PathFailure::Singular) => {
                        return Ok(EditProposal::unsolvable(UnsolvableReason::Singular { axis }, 0))
                    }
                    Err(_) => return Ok(EditProposal::unsolvable(UnsolvableReason::NoSolvableLiteral { axis }, 0)),
                }
            }
            Err(PathFailure::Singular) => return Ok(EditProposal::unsolvable(UnsolvableReason::Singular { axis }, 0)),
            Err(PathFailure::NoLiteral) => {
                return Ok(EditProposal::unsolvable(UnsolvableReason::NoSolvableLiteral { axis }, 0))
            }
        }
    }

    let mut iterations = 0;
    loop {
        if overrides.is_empty() {
            break;
        }
        let result = evaluate_with_overrides(program, markers, limits, &overrides);
        iterations += 1;
        if let Some(diag) = result.diagnostics.first() {
            let message = format!("candidate rewrite fails to evaluate: {diag}");
            return Ok(EditProposal::unsolvable(UnsolvableReason::EvaluationFailed { message }, iterations));
        }
        let Some(wp) = result.waypoints.get(request.waypoint_index) else {
            let message = "candidate rewrite removes the edited waypoint".to_string();
            return Ok(EditProposal::unsolvable(UnsolvableReason::EvaluationFailed { message }, iterations));
        };
        let achieved: BTreeMap<Axis, f64> = request.targets.keys().map(|a| (*a, wp.axis(*a).value)).collect();
        if request.targets.iter().all(|(a, t)| close(achieved[a], *t, tol)) {
            break;
        }
        if iterations >= max_iter {
            return Ok(finish(originals, overrides, EditStatus::BestEffort { achieved }, iterations));
        }
        let mut progressed = false;
        for plan in &mut plans {
            let Some(span) = plan.span else { continue };
            let y = achieved[&plan.axis];
            if close(y, plan.target, tol) {
                continue;
            }
            let v = overrides[&span];
            let slope = (y - plan.prev_achieved) / (v - plan.prev_value);
            let next = v + (plan.target - y) / slope;
            if slope.is_finite() && slope != 0.0 && next.is_finite() {
                plan.prev_value = v;
                plan.prev_achieved = y;
                overrides.insert(span, next);
                progressed = true;
            }
        }
        if !progressed {
            return Ok(finish(originals, overrides, EditStatus::BestEffort { achieved }, iterations));
        }
    }
    Ok(finish(originals, overrides, EditStatus::Exact, iterations))
}

fn finish(
    originals: HashMap<SourceSpan, f64>,
    overrides: HashMap<SourceSpan, f64>,
    status: EditStatus,
    iterations: u32,
) -> EditProposal {
    let mut rewrites: Vec<LiteralRewrite> = overrides
        .into_iter()
        .filter(|(span, v)| originals.get(span) != Some(v))
        .map(|(span, new_value)| LiteralRewrite { span, new_value })
        .collect();
    rewrites.sort_by_key(|r| r.span);
    EditProposal { rewrites, status, iterations }
}

/// Applies an `Exact` or `BestEffort` proposal to `source`.
pub fn apply_edit(source: &str, proposal: &EditProposal) -> Result<String, LinkError> {
    if let EditStatus::Unsolvable { reason } = &proposal.status {
        return Err(LinkError::NotApplicable(format!("unsolvable proposal: {reason:?}")));
    }
    Ok(apply_rewrites(source, &proposal.rewrites)?)
}
