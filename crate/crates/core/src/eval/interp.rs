//! Tree-walking interpreter that threads provenance through every number.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::markers::{Axis, MarkerId, MarkerSet};
use super::trace::{ArithOp, TrackedValue};
use crate::dsl::{render_number, BinaryOp, Expr, Program, SourceSpan, Stmt, UnaryOp};

pub const DEFAULT_MAX_STEPS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Limits {
    #[serde(rename = "maxSteps")]
    pub max_steps: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Self { max_steps: DEFAULT_MAX_STEPS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuntimeErrorKind {
    UnknownIdentifier,
    UnknownBuiltin,
    ArityMismatch,
    DivisionByZero,
    StepLimitExceeded,
    NonFiniteResult,
    TypeMismatch,
    InvalidArgument,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{kind:?} at {span}: {message}")]
pub struct RuntimeError {
    pub span: SourceSpan,
    pub kind: RuntimeErrorKind,
    pub message: String,
}

/// A commanded pose, one per executed `moveTo`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Waypoint {
    pub index: usize,
    pub x: TrackedValue,
    pub y: TrackedValue,
    pub z: TrackedValue,
    pub yaw: TrackedValue,
    pub call_span: SourceSpan,
    pub followed_by_wait: bool,
}

impl Waypoint {
    pub fn axis(&self, axis: Axis) -> &TrackedValue {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
            Axis::Z => &self.z,
            Axis::Yaw => &self.yaw,
        }
    }

    pub fn pose(&self) -> super::Pose {
        super::Pose::new(self.x.value, self.y.value, self.z.value, self.yaw.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsoleLine {
    pub text: String,
    pub span: SourceSpan,
}

/// A `sleep(t)` issued after waypoint `after_waypoint` (-1: before any).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SleepItem {
    pub after_waypoint: i64,
    pub seconds: TrackedValue,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MissionResult {
    pub waypoints: Vec<Waypoint>,
    pub console: Vec<ConsoleLine>,
    pub sleeps: Vec<SleepItem>,
    pub diagnostics: Vec<RuntimeError>,
}

impl MissionResult {
    pub fn is_ok(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

pub fn evaluate(program: &Program, markers: &MarkerSet, limits: Limits) -> MissionResult {
    evaluate_with_overrides(program, markers, limits, &HashMap::new())
}

/// Evaluates as if each literal at a span in `overrides` held the mapped value.
///
/// Spans in traces stay those of `program`, which lets the edit solver probe
/// candidate rewrites without re-rendering and re-parsing the source.
pub fn evaluate_with_overrides(
    program: &Program,
    markers: &MarkerSet,
    limits: Limits,
    overrides: &HashMap<SourceSpan, f64>,
) -> MissionResult {
    let mut interp = Interpreter {
        markers,
        limits,
        overrides,
        steps: 0,
        env: HashMap::new(),
        out: MissionResult::default(),
    };
    if let Err(err) = interp.block(&program.statements) {
        interp.out.diagnostics.push(err);
    }
    interp.out
}

#[derive(Debug, Clone)]
enum Value {
    Num(TrackedValue),
    Bool(bool),
    Str(String),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Num(_) => "number",
            Value::Bool(_) => "boolean",
            Value::Str(_) => "string",
        }
    }

    fn render(&self) -> String {
        match self {
            Value::Num(v) => render_number(v.value),
            Value::Bool(b) => b.to_string(),
            Value::Str(s) => s.clone(),
        }
    }
}

struct Interpreter<'a> {
    markers: &'a MarkerSet,
    limits: Limits,
    overrides: &'a HashMap<SourceSpan, f64>,
    steps: u64,
    env: HashMap<String, Value>,
    out: MissionResult,
}

fn err(span: SourceSpan, kind: RuntimeErrorKind, message: impl Into<String>) -> RuntimeError {
    RuntimeError { span, kind, message: message.into() }
}

impl Interpreter<'_> {
    fn tick(&mut self, span: SourceSpan) -> Result<(), RuntimeError> {
        self.steps += 1;
        if self.steps > self.limits.max_steps {
            return Err(err(
                span,
                RuntimeErrorKind::StepLimitExceeded,
                format!("more than {} steps executed", self.limits.max_steps),
            ));
        }
        Ok(())
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<(), RuntimeError> {
        stmts.iter().try_for_each(|s| self.stmt(s))
    }

    fn stmt(&mut self, stmt: &Stmt) -> Result<(), RuntimeError> {
        self.tick(stmt.span())?;
        match stmt {
            Stmt::Assign { name, expr, .. } => {
                let value = self.expr(expr)?;
                self.env.insert(name.clone(), value);
                Ok(())
            }
            Stmt::Call { name, args, span } => self.call_stmt(name, args, *span),
            Stmt::If { cond, then_branch, else_branch, .. } => match self.expr(cond)? {
                Value::Bool(true) => self.block(then_branch),
                Value::Bool(false) => else_branch.as_deref().map_or(Ok(()), |b| self.block(b)),
                other => Err(err(
                    cond.span(),
                    RuntimeErrorKind::TypeMismatch,
                    format!("condition must be a comparison, got {}", other.type_name()),
                )),
            },
            Stmt::For { var, from, to, step, body, span } => {
                let from_v = self.number(from)?;
                let to_v = self.number(to)?;
                let step_v = match step {
                    Some(e) => self.number(e)?,
                    None => TrackedValue::synthetic(1.0),
                };
                if step_v.value == 0.0 {
                    let at = step.as_ref().map_or(*span, Expr::span);
                    return Err(err(at, RuntimeErrorKind::InvalidArgument, "for step must not be zero"));
                }
                let saved = self.env.remove(var);
                let mut k = 0u64;
                let result = loop {
                    let counter = TrackedValue::synthetic(k as f64);
                    let offset = TrackedValue::binary(ArithOp::Mul, &step_v, &counter);
                    let index = TrackedValue::binary(ArithOp::Add, &from_v, &offset);
                    if let Err(e) = self.check_finite(&index, *span) {
                        break Err(e);
                    }
                    let running = if step_v.value > 0.0 { index.value <= to_v.value } else { index.value >= to_v.value };
                    if !running {
                        break Ok(());
                    }
                    if let Err(e) = self.tick(*span) {
                        break Err(e);
                    }
                    self.env.insert(var.clone(), Value::Num(index));
                    if let Err(e) = self.block(body) {
                        break Err(e);
                    }
                    k += 1;
                };
                match saved {
                    Some(v) => self.env.insert(var.clone(), v),
                    None => self.env.remove(var),
                };
                result
            }
        }
    }

    fn call_stmt(&mut self, name: &str, args: &[Expr], span: SourceSpan) -> Result<(), RuntimeError> {
        match name {
            "moveTo" => {
                arity(name, args, 4, span)?;
                let [x, y, z, yaw] = [0, 1, 2, 3].map(|i| self.number(&args[i]));
                let waypoint = Waypoint {
                    index: self.out.waypoints.len(),
                    x: x?,
                    y: y?,
                    z: z?,
                    yaw: yaw?,
                    call_span: span,
                    followed_by_wait: false,
                };
                self.out.waypoints.push(waypoint);
            }
            "wait" => {
                arity(name, args, 0, span)?;
                if let Some(last) = self.out.waypoints.last_mut() {
                    last.followed_by_wait = true;
                }
            }
            "sleep" => {
                arity(name, args, 1, span)?;
                let seconds = self.number(&args[0])?;
                if seconds.value < 0.0 {
                    return Err(err(args[0].span(), RuntimeErrorKind::InvalidArgument, "sleep duration must be >= 0"));
                }
                let after_waypoint = self.out.waypoints.len() as i64 - 1;
                self.out.sleeps.push(SleepItem { after_waypoint, seconds });
            }
            "print" => {
                let mut parts = Vec::with_capacity(args.len());
                for a in args {
                    parts.push(self.expr(a)?.render());
                }
                self.out.console.push(ConsoleLine { text: parts.join(" "), span });
            }
            _ => {
                self.builtin_value(name, args, span)?;
            }
        }
        Ok(())
    }

    fn builtin_value(&mut self, name: &str, args: &[Expr], span: SourceSpan) -> Result<Value, RuntimeError> {
        let axis = match name {
            "marker_x" => Axis::X,
            "marker_y" => Axis::Y,
            "marker_z" => Axis::Z,
            "marker_yaw" => Axis::Yaw,
            "moveTo" | "wait" | "sleep" | "print" => {
                return Err(err(span, RuntimeErrorKind::TypeMismatch, format!("{name} does not return a value")))
            }
            _ => return Err(err(span, RuntimeErrorKind::UnknownBuiltin, format!("unknown builtin {name:?}"))),
        };
        arity(name, args, 1, span)?;
        let marker = match self.expr(&args[0])? {
            Value::Str(s) => s.parse::<MarkerId>().map_err(|m| err(args[0].span(), RuntimeErrorKind::InvalidArgument, m))?,
            other => {
                return Err(err(
                    args[0].span(),
                    RuntimeErrorKind::TypeMismatch,
                    format!("marker name must be a string, got {}", other.type_name()),
                ))
            }
        };
        let value = self.markers.get(marker).get(axis);
        Ok(Value::Num(TrackedValue::external(marker, axis, value)))
    }

    fn number(&mut self, expr: &Expr) -> Result<TrackedValue, RuntimeError> {
        match self.expr(expr)? {
            Value::Num(v) => Ok(v),
            other => Err(err(
                expr.span(),
                RuntimeErrorKind::TypeMismatch,
                format!("expected a number, got {}", other.type_name()),
            )),
        }
    }

    fn check_finite(&self, v: &TrackedValue, span: SourceSpan) -> Result<(), RuntimeError> {
        if v.value.is_finite() {
            Ok(())
        } else {
            Err(err(span, RuntimeErrorKind::NonFiniteResult, "result is not a finite number"))
        }
    }

    fn expr(&mut self, expr: &Expr) -> Result<Value, RuntimeError> {
        match expr {
            Expr::NumberLit { value, span } => {
                let value = self.overrides.get(span).copied().unwrap_or(*value);
                Ok(Value::Num(TrackedValue::literal(*span, value)))
            }
            Expr::StringLit { value, .. } => Ok(Value::Str(value.clone())),
            Expr::Var { name, span } => self
                .env
                .get(name)
                .cloned()
                .ok_or_else(|| err(*span, RuntimeErrorKind::UnknownIdentifier, format!("unknown identifier {name:?}"))),
            Expr::Unary { op: UnaryOp::Neg, operand, .. } => Ok(Value::Num(self.number(operand)?.neg())),
            Expr::BuiltinCall { name, args, span } => self.builtin_value(name, args, *span),
            Expr::Binary { op, lhs, rhs, span } => {
                let l = self.expr(lhs)?;
                let r = self.expr(rhs)?;
                self.binary(*op, l, r, *span, rhs.span())
            }
        }
    }

    fn binary(&self, op: BinaryOp, l: Value, r: Value, span: SourceSpan, rhs_span: SourceSpan) -> Result<Value, RuntimeError> {
        let arith = match op {
            BinaryOp::Add => Some(ArithOp::Add),
            BinaryOp::Sub => Some(ArithOp::Sub),
            BinaryOp::Mul => Some(ArithOp::Mul),
            BinaryOp::Div => Some(ArithOp::Div),
            _ => None,
        };
        match (l, r) {
            (Value::Num(a), Value::Num(b)) => {
                if let Some(arith) = arith {
                    if arith == ArithOp::Div && b.value == 0.0 {
                        return Err(err(rhs_span, RuntimeErrorKind::DivisionByZero, "division by zero"));
                    }
                    let v = TrackedValue::binary(arith, &a, &b);
                    self.check_finite(&v, span)?;
                    return Ok(Value::Num(v));
                }
                let (a, b) = (a.value, b.value);
                Ok(Value::Bool(match op {
                    BinaryOp::Lt => a < b,
                    BinaryOp::Le => a <= b,
                    BinaryOp::Gt => a > b,
                    BinaryOp::Ge => a >= b,
                    BinaryOp::Eq => a == b,
                    _ => a != b,
                }))
            }
            (Value::Str(a), Value::Str(b)) if matches!(op, BinaryOp::Eq | BinaryOp::Ne) => {
                Ok(Value::Bool((a == b) == (op == BinaryOp::Eq)))
            }
            (Value::Bool(a), Value::Bool(b)) if matches!(op, BinaryOp::Eq | BinaryOp::Ne) => {
                Ok(Value::Bool((a == b) == (op == BinaryOp::Eq)))
            }
            (l, r) => Err(err(
                span,
                RuntimeErrorKind::TypeMismatch,
                format!("cannot apply {op} to {} and {}", l.type_name(), r.type_name()),
            )),
        }
    }
}

fn arity(name: &str, args: &[Expr], expected: usize, span: SourceSpan) -> Result<(), RuntimeError> {
    if args.len() == expected {
        Ok(())
    } else {
        Err(err(
            span,
            RuntimeErrorKind::ArityMismatch,
            format!("{name} takes {expected} argument(s), got {}", args.len()),
        ))
    }
}
