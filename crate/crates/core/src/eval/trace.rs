//! Provenance traces attached to every computed number.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::markers::{Axis, MarkerId};
use crate::dsl::SourceSpan;

pub type Trace = Arc<TraceNode>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn apply(self, lhs: f64, rhs: f64) -> f64 {
        match self {
            ArithOp::Add => lhs + rhs,
            ArithOp::Sub => lhs - rhs,
            ArithOp::Mul => lhs * rhs,
            ArithOp::Div => lhs / rhs,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            ArithOp::Add => '+',
            ArithOp::Sub => '-',
            ArithOp::Mul => '*',
            ArithOp::Div => '/',
        }
    }
}

/// How a number came to be.
///
/// Leaves are source literals, loop counters (`Synthetic`, no span) and
/// marker pose reads. Interior nodes remember the operand values seen at
/// evaluation time so a target can be pushed back down one path without
/// re-running the program.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TraceNode {
    Literal {
        span: SourceSpan,
        value: f64,
    },
    Synthetic {
        value: f64,
    },
    External {
        marker: MarkerId,
        axis: Axis,
        value: f64,
    },
    Neg {
        child: Trace,
    },
    Binary {
        op: ArithOp,
        left: Trace,
        right: Trace,
        left_value: f64,
        right_value: f64,
    },
}

impl TraceNode {
    /// Recomputes the traced value bottom-up from the stored leaf values.
    pub fn replay(&self) -> f64 {
        match self {
            TraceNode::Literal { value, .. }
            | TraceNode::Synthetic { value }
            | TraceNode::External { value, .. } => *value,
            TraceNode::Neg { child } => -child.replay(),
            TraceNode::Binary { op, left, right, .. } => op.apply(left.replay(), right.replay()),
        }
    }

    /// True when the only operations on every path are `+`, `-` and
    /// negation, or multiplication/division where one side is a constant
    /// with no literal leaves.
    pub fn is_affine(&self) -> bool {
        match self {
            TraceNode::Literal { .. } | TraceNode::Synthetic { .. } | TraceNode::External { .. } => true,
            TraceNode::Neg { child } => child.is_affine(),
            TraceNode::Binary { op, left, right, .. } => match op {
                ArithOp::Add | ArithOp::Sub => left.is_affine() && right.is_affine(),
                ArithOp::Mul => {
                    (literal_leaves(left).is_empty() && right.is_affine())
                        || (literal_leaves(right).is_empty() && left.is_affine())
                }
                ArithOp::Div => literal_leaves(right).is_empty() && left.is_affine(),
            },
        }
    }
}

impl fmt::Display for TraceNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceNode::Literal { span, value } => write!(f, "{value}@{span}"),
            TraceNode::Synthetic { value } => write!(f, "#{value}"),
            TraceNode::External { marker, axis, value } => write!(f, "{marker}.{axis}={value}"),
            TraceNode::Neg { child } => write!(f, "-({child})"),
            TraceNode::Binary { op, left, right, .. } => write!(f, "({left} {} {right})", op.symbol()),
        }
    }
}

/// A number together with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackedValue {
    pub value: f64,
    pub trace: Trace,
}

impl TrackedValue {
    pub fn literal(span: SourceSpan, value: f64) -> Self {
        Self { value, trace: Arc::new(TraceNode::Literal { span, value }) }
    }

    pub fn synthetic(value: f64) -> Self {
        Self { value, trace: Arc::new(TraceNode::Synthetic { value }) }
    }

    pub fn external(marker: MarkerId, axis: Axis, value: f64) -> Self {
        Self { value, trace: Arc::new(TraceNode::External { marker, axis, value }) }
    }

    pub fn neg(&self) -> Self {
        Self { value: -self.value, trace: Arc::new(TraceNode::Neg { child: self.trace.clone() }) }
    }

    /// Combines two tracked operands. The caller checks the result is finite.
    pub fn binary(op: ArithOp, lhs: &TrackedValue, rhs: &TrackedValue) -> Self {
        Self {
            value: op.apply(lhs.value, rhs.value),
            trace: Arc::new(TraceNode::Binary {
                op,
                left: lhs.trace.clone(),
                right: rhs.trace.clone(),
                left_value: lhs.value,
                right_value: rhs.value,
            }),
        }
    }
}

/// Spans of every `Literal` leaf under `trace`. Shared subtrees are visited once.
pub fn literal_leaves(trace: &TraceNode) -> BTreeSet<SourceSpan> {
    let mut seen = HashSet::new();
    let mut out = BTreeSet::new();
    collect_leaves(trace, &mut seen, &mut out);
    out
}

fn collect_leaves(node: &TraceNode, seen: &mut HashSet<*const TraceNode>, out: &mut BTreeSet<SourceSpan>) {
    if !seen.insert(node as *const TraceNode) {
        return;
    }
    match node {
        TraceNode::Literal { span, .. } => {
            out.insert(*span);
        }
        TraceNode::Synthetic { .. } | TraceNode::External { .. } => {}
        TraceNode::Neg { child } => collect_leaves(child, seen, out),
        TraceNode::Binary { left, right, .. } => {
            collect_leaves(left, seen, out);
            collect_leaves(right, seen, out);
        }
    }
}

/// Marker reads anywhere under `trace`.
pub fn external_leaves(trace: &TraceNode) -> BTreeSet<(MarkerId, Axis)> {
    fn walk(node: &TraceNode, seen: &mut HashSet<*const TraceNode>, out: &mut BTreeSet<(MarkerId, Axis)>) {
        if !seen.insert(node as *const TraceNode) {
            return;
        }
        match node {
            TraceNode::External { marker, axis, .. } => {
                out.insert((*marker, *axis));
            }
            TraceNode::Literal { .. } | TraceNode::Synthetic { .. } => {}
            TraceNode::Neg { child } => walk(child, seen, out),
            TraceNode::Binary { left, right, .. } => {
                walk(left, seen, out);
                walk(right, seen, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    walk(trace, &mut HashSet::new(), &mut out);
    out
}
