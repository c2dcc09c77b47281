#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hoverlink_core::{evaluate, parse, Limits, MarkerSet, MissionResult};

const VARS: [&str; 6] = ["a", "b", "c", "side", "h", "turn"];
const MARKERS: [&str; 3] = ["red", "green", "blue"];
const READS: [&str; 4] = ["marker_x", "marker_y", "marker_z", "marker_yaw"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn literal(rng: &mut impl Rng) -> String {
    match rng.gen_range(0..10) {
        0 => "0".into(),
        1..=5 => rng.gen_range(-5i32..=9).to_string(),
        _ => format!("{:.2}", rng.gen_range(-9.0..9.0f64)),
    }
}

fn nonzero_literal(rng: &mut impl Rng) -> String {
    loop {
        let v = rng.gen_range(1i32..=8);
        if v != 0 {
            return if rng.gen_bool(0.2) { format!("-{v}") } else { v.to_string() };
        }
    }
}

fn expr(rng: &mut impl Rng, defined: &[&str], depth: u32) -> String {
    let leaf = depth == 0 || rng.gen_bool(0.35);
    if leaf {
        return match rng.gen_range(0..10) {
            0..=4 => literal(rng),
            5..=8 if !defined.is_empty() => defined.choose(rng).unwrap().to_string(),
            9 => format!("{}(\"{}\")", READS.choose(rng).unwrap(), MARKERS.choose(rng).unwrap()),
            _ => literal(rng),
        };
    }
    let lhs = expr(rng, defined, depth - 1);
    match rng.gen_range(0..7) {
        0 | 1 => format!("{lhs} + {}", expr(rng, defined, depth - 1)),
        2 | 3 => format!("{lhs} - ({})", expr(rng, defined, depth - 1)),
        4 | 5 => format!("({lhs}) * ({})", expr(rng, defined, depth - 1)),
        _ => format!("({lhs}) / {}", nonzero_literal(rng)),
    }
}

/// A straight-line program: no loops or branches, so no literal can change
/// which statements run. Always contains at least one `moveTo`.
pub fn straight_line_program(rng: &mut impl Rng) -> String {
    let n = rng.gen_range(1..=30usize);
    let mut defined: Vec<&str> = Vec::new();
    let mut lines = Vec::new();
    let mut moves = 0;
    while lines.len() < n {
        match rng.gen_range(0..10) {
            0..=3 => {
                let name = *VARS.choose(rng).unwrap();
                lines.push(format!("{name} = {}", expr(rng, &defined, 3)));
                if !defined.contains(&name) {
                    defined.push(name);
                }
            }
            4..=7 => {
                let args: Vec<String> = (0..4).map(|_| expr(rng, &defined, 2)).collect();
                lines.push(format!("moveTo({})", args.join(", ")));
                moves += 1;
                if rng.gen_bool(0.5) {
                    lines.push("wait()".into());
                }
            }
            8 => lines.push(format!("sleep({})", rng.gen_range(0..4))),
            _ => lines.push(format!("print({})", expr(rng, &defined, 1))),
        }
    }
    if moves == 0 {
        let args: Vec<String> = (0..4).map(|_| expr(rng, &defined, 2)).collect();
        lines.push(format!("moveTo({})", args.join(", ")));
    }
    lines.join("\n")
}

pub fn run(src: &str) -> MissionResult {
    evaluate(&parse(src).expect("generated program parses"), &MarkerSet::default(), Limits::default())
}

/// Generated programs that evaluate cleanly.
pub fn corpus(seed: u64, count: usize) -> Vec<String> {
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let src = straight_line_program(&mut rng);
        if run(&src).is_ok() {
            out.push(src);
        }
    }
    out
}

/// Replaces `src[start..end]` with `text`. Independent of the crate's rewriter.
pub fn splice(src: &str, start: usize, end: usize, text: &str) -> String {
    format!("{}{}{}", &src[..start], text, &src[end..])
}

/// Byte offsets of every number token, found with a plain scan.
pub fn number_tokens(src: &str) -> Vec<(usize, usize)> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut in_string = None;
    while i < bytes.len() {
        let c = bytes[i];
        if let Some(q) = in_string {
            if c == q {
                in_string = None;
            }
            i += 1;
            continue;
        }
        if c == b'"' || c == b'\'' {
            in_string = Some(c);
            i += 1;
            continue;
        }
        let prev_ident = i > 0 && (bytes[i - 1].is_ascii_alphanumeric() || bytes[i - 1] == b'_');
        if c.is_ascii_digit() && !prev_ident {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            out.push((start, i));
            continue;
        }
        i += 1;
    }
    out
}

/// Structure of a program with every number literal blanked out.
pub fn shape(program: &hoverlink_core::Program) -> String {
    use hoverlink_core::dsl::{Expr, Stmt};
    fn expr(e: &Expr) -> String {
        match e {
            Expr::NumberLit { .. } => "#".into(),
            Expr::StringLit { value, .. } => format!("{value:?}"),
            Expr::Var { name, .. } => name.clone(),
            Expr::Unary { operand, .. } => format!("-({})", expr(operand)),
            Expr::Binary { op, lhs, rhs, .. } => format!("({} {op} {})", expr(lhs), expr(rhs)),
            Expr::BuiltinCall { name, args, .. } => {
                format!("{name}({})", args.iter().map(expr).collect::<Vec<_>>().join(","))
            }
        }
    }
    fn stmts(list: &[Stmt]) -> String {
        list.iter()
            .map(|s| match s {
                Stmt::Assign { name, expr: e, .. } => format!("{name}={};", expr(e)),
                Stmt::Call { name, args, .. } => {
                    format!("{name}({});", args.iter().map(expr).collect::<Vec<_>>().join(","))
                }
                Stmt::For { var, from, to, step, body, .. } => format!(
                    "for {var}={},{},{} {{{}}}",
                    expr(from),
                    expr(to),
                    step.as_ref().map(expr).unwrap_or_default(),
                    stmts(body)
                ),
                Stmt::If { cond, then_branch, else_branch, .. } => format!(
                    "if {} {{{}}} else {{{}}}",
                    expr(cond),
                    stmts(then_branch),
                    else_branch.as_deref().map(stmts).unwrap_or_default()
                ),
            })
            .collect()
    }
    stmts(&program.statements)
}
