use std::fmt;

use serde::{Deserialize, Serialize};

use super::span::SourceSpan;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Program {
    pub statements: Vec<Stmt>,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Stmt {
    Assign {
        name: String,
        name_span: SourceSpan,
        expr: Expr,
        span: SourceSpan,
    },
    Call {
        name: String,
        args: Vec<Expr>,
        span: SourceSpan,
    },
    For {
        var: String,
        from: Expr,
        to: Expr,
        step: Option<Expr>,
        body: Vec<Stmt>,
        span: SourceSpan,
    },
    If {
        cond: Expr,
        then_branch: Vec<Stmt>,
        else_branch: Option<Vec<Stmt>>,
        span: SourceSpan,
    },
}

impl Stmt {
    pub fn span(&self) -> SourceSpan {
        match self {
            Stmt::Assign { span, .. }
            | Stmt::Call { span, .. }
            | Stmt::For { span, .. }
            | Stmt::If { span, .. } => *span,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UnaryOp {
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl BinaryOp {
    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "~=",
        }
    }

    pub(crate) fn from_symbol(s: &str) -> Option<BinaryOp> {
        Some(match s {
            "+" => BinaryOp::Add,
            "-" => BinaryOp::Sub,
            "*" => BinaryOp::Mul,
            "/" => BinaryOp::Div,
            "<" => BinaryOp::Lt,
            "<=" => BinaryOp::Le,
            ">" => BinaryOp::Gt,
            ">=" => BinaryOp::Ge,
            "==" => BinaryOp::Eq,
            "~=" | "!=" => BinaryOp::Ne,
            _ => return None,
        })
    }
}

impl fmt::Display for BinaryOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Expression node. Every variant carries the span of its full source extent.
///
/// A minus sign written immediately before a number literal is folded into the
/// literal (`-3` is one `NumberLit` spanning both tokens), so rewriting a
/// literal to a negative value never changes the tree shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    NumberLit {
        value: f64,
        span: SourceSpan,
    },
    StringLit {
        value: String,
        span: SourceSpan,
    },
    Var {
        name: String,
        span: SourceSpan,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
        span: SourceSpan,
    },
    Binary {
        op: BinaryOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        span: SourceSpan,
    },
    BuiltinCall {
        name: String,
        args: Vec<Expr>,
        span: SourceSpan,
    },
}

impl Expr {
    pub fn span(&self) -> SourceSpan {
        match self {
            Expr::NumberLit { span, .. }
            | Expr::StringLit { span, .. }
            | Expr::Var { span, .. }
            | Expr::Unary { span, .. }
            | Expr::Binary { span, .. }
            | Expr::BuiltinCall { span, .. } => *span,
        }
    }
}

impl Program {
    /// All number literals in source order, as `(span, value)` pairs.
    pub fn number_literals(&self) -> Vec<(SourceSpan, f64)> {
        let mut out = Vec::new();
        visit_stmts(&self.statements, &mut |e| {
            if let Expr::NumberLit { value, span } = e {
                out.push((*span, *value));
            }
        });
        out.sort_by_key(|(span, _)| span.start);
        out
    }
}

fn visit_stmts(stmts: &[Stmt], f: &mut impl FnMut(&Expr)) {
    for stmt in stmts {
        match stmt {
            Stmt::Assign { expr, .. } => visit_expr(expr, f),
            Stmt::Call { args, .. } => args.iter().for_each(|a| visit_expr(a, f)),
            Stmt::For { from, to, step, body, .. } => {
                visit_expr(from, f);
                visit_expr(to, f);
                if let Some(step) = step {
                    visit_expr(step, f);
                }
                visit_stmts(body, f);
            }
            Stmt::If { cond, then_branch, else_branch, .. } => {
                visit_expr(cond, f);
                visit_stmts(then_branch, f);
                if let Some(e) = else_branch {
                    visit_stmts(e, f);
                }
            }
        }
    }
}

fn visit_expr(expr: &Expr, f: &mut impl FnMut(&Expr)) {
    f(expr);
    match expr {
        Expr::Unary { operand, .. } => visit_expr(operand, f),
        Expr::Binary { lhs, rhs, .. } => {
            visit_expr(lhs, f);
            visit_expr(rhs, f);
        }
        Expr::BuiltinCall { args, .. } => args.iter().for_each(|a| visit_expr(a, f)),
        _ => {}
    }
}
