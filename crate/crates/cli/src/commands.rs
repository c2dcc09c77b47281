//! Offline subcommands. Each returns the text to print and whether the
//! input was clean.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use anyhow::{anyhow, bail, Context};

use hoverlink_core::grading::load_rubric_dir;
use hoverlink_core::linkage::{DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use hoverlink_core::sim::{run_to_completion, Phase};
use hoverlink_core::{
    apply_edit, builtin_rubrics, compute_traces, evaluate, grade, highlight, parse, solve_edit, Axis, EditRequest,
    EditStatus, Limits, MarkerSet, MissionResult, Program, Rubric, SimParams,
};

pub struct Output {
    pub text: String,
    pub ok: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Self { text, ok: true }
    }
}

/// Reads program text from a path, or stdin for `-`.
pub fn read_source(path: &Path) -> anyhow::Result<String> {
    if path == Path::new("-") {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        return Ok(text);
    }
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn load_rubrics(dir: Option<&Path>) -> anyhow::Result<BTreeMap<String, Rubric>> {
    match dir {
        Some(d) => Ok(load_rubric_dir(d)?),
        None => Ok(builtin_rubrics()),
    }
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, col)
}

fn compile(src: &str) -> Result<Program, String> {
    parse(src).map_err(|e| {
        let (l, c) = line_col(src, e.span().start);
        format!("{l}:{c}: {e}")
    })
}

fn run(src: &str) -> anyhow::Result<MissionResult> {
    let program = compile(src).map_err(|e| anyhow!(e))?;
    Ok(evaluate(&program, &MarkerSet::default(), Limits::default()))
}

pub fn check(src: &str, json: bool) -> anyhow::Result<Output> {
    let program = match compile(src) {
        Ok(p) => p,
        Err(e) => return Ok(Output { text: format!("error: {e}\n"), ok: false }),
    };
    let result = evaluate(&program, &MarkerSet::default(), Limits::default());
    if json {
        return Ok(Output { text: serde_json::to_string_pretty(&result)? + "\n", ok: result.is_ok() });
    }
    let mut out = String::new();
    for line in &result.console {
        writeln!(out, "> {}", line.text)?;
    }
    writeln!(out, "{:>3}  {:>9} {:>9} {:>9} {:>9}  wait", "#", "x", "y", "z", "yaw")?;
    for wp in &result.waypoints {
        writeln!(
            out,
            "{:>3}  {:>9.3} {:>9.3} {:>9.3} {:>9.3}  {}",
            wp.index,
            wp.x.value,
            wp.y.value,
            wp.z.value,
            wp.yaw.value,
            if wp.followed_by_wait { "yes" } else { "no" }
        )?;
    }
    for d in &result.diagnostics {
        let (l, c) = line_col(src, d.span.start);
        writeln!(out, "error: {l}:{c}: {:?}: {}", d.kind, d.message)?;
    }
    Ok(Output { text: out, ok: result.is_ok() })
}

pub fn highlight_cmd(src: &str, waypoint: usize, axes: &[Axis], json: bool) -> anyhow::Result<Output> {
    let result = run(src)?;
    let h = highlight(&result, waypoint, axes)?;
    if json {
        return Ok(Output::ok(serde_json::to_string_pretty(&h)? + "\n"));
    }
    let mut out = String::new();
    for span in &h.spans {
        let (l, c) = line_col(src, span.start);
        writeln!(out, "{l}:{c}\t{span}\t{}", span.slice(src))?;
    }
    if h.spans.is_empty() {
        writeln!(out, "no literals feed waypoint {waypoint}")?;
    }
    Ok(Output::ok(out))
}

/// Parses `axis=value` pairs such as `x=3` or `yaw=-90`.
pub fn parse_targets(pairs: &[String]) -> anyhow::Result<BTreeMap<Axis, f64>> {
    let mut out = BTreeMap::new();
    for pair in pairs {
        let (axis, value) = pair.split_once('=').ok_or_else(|| anyhow!("expected axis=value, got {pair:?}"))?;
        let axis: Axis = axis.trim().parse().map_err(|e: String| anyhow!(e))?;
        let value: f64 = value.trim().parse().with_context(|| format!("bad number in {pair:?}"))?;
        out.insert(axis, value);
    }
    if out.is_empty() {
        bail!("give at least one --set axis=value");
    }
    Ok(out)
}

pub fn edit(src: &str, waypoint: usize, targets: BTreeMap<Axis, f64>, json: bool) -> anyhow::Result<(Output, Option<String>)> {
    let program = compile(src).map_err(|e| anyhow!(e))?;
    let request = EditRequest { waypoint_index: waypoint, targets };
    let proposal = solve_edit(&program, &MarkerSet::default(), &request, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS)?;
    let edited = match proposal.status {
        EditStatus::Unsolvable { .. } => None,
        _ => Some(apply_edit(src, &proposal)?),
    };
    let ok = edited.is_some();
    if json {
        return Ok((Output { text: serde_json::to_string_pretty(&proposal)? + "\n", ok }, edited));
    }
    let mut out = String::new();
    writeln!(out, "status: {} after {} iteration(s)", proposal.status.name(), proposal.iterations)?;
    match &proposal.status {
        EditStatus::BestEffort { achieved } => writeln!(out, "achieved: {achieved:?}")?,
        EditStatus::Unsolvable { reason } => writeln!(out, "reason: {reason:?}")?,
        EditStatus::Exact => {}
    }
    for rw in &proposal.rewrites {
        let (l, c) = line_col(src, rw.span.start);
        writeln!(out, "{l}:{c}\t{} -> {}", rw.span.slice(src), hoverlink_core::dsl::render_number(rw.new_value))?;
    }
    Ok((Output { text: out, ok }, edited))
}

pub fn grade_cmd(src: &str, task: &str, rubrics: &BTreeMap<String, Rubric>, json: bool) -> anyhow::Result<Output> {
    let rubric = rubrics.get(task).ok_or_else(|| anyhow!("no rubric for task {task:?}"))?;
    let result = match parse(src) {
        Ok(p) => evaluate(&p, &MarkerSet::default(), Limits::default()),
        Err(_) => MissionResult::default(),
    };
    let report = grade(&result, rubric);
    if json {
        return Ok(Output::ok(serde_json::to_string_pretty(&report)? + "\n"));
    }
    let mut out = String::new();
    for c in &report.per_criterion {
        writeln!(out, "[{}] {:<16} {}", if c.passed { "x" } else { " " }, c.id, c.detail)?;
    }
    writeln!(
        out,
        "{}/{} points{}",
        report.points,
        report.max_points,
        if report.provisional { " (provisional rubric)" } else { "" }
    )?;
    Ok(Output::ok(out))
}

pub fn simulate(src: &str, params: SimParams, dt: f64, json: bool) -> anyhow::Result<Output> {
    if dt.is_nan() || dt <= 0.0 {
        bail!("--dt must be positive");
    }
    let result = run(src)?;
    let end = run_to_completion(&result, params, dt, 100_000_000)?;
    if json {
        return Ok(Output { text: serde_json::to_string_pretty(&end)? + "\n", ok: end.phase == Phase::Done });
    }
    let mut out = String::new();
    for a in &end.arrivals {
        writeln!(
            out,
            "t={:>9.3}s  waypoint {:>3}  ({:.3}, {:.3}, {:.3}, {:.1})",
            a.clock, a.waypoint, a.pose.x, a.pose.y, a.pose.z, a.pose.yaw
        )?;
    }
    match end.completed_at {
        Some(t) => writeln!(out, "mission complete after {t:.3}s")?,
        None => writeln!(out, "mission did not complete")?,
    }
    Ok(Output { text: out, ok: end.phase == Phase::Done })
}

pub fn traces(path: &Path) -> anyhow::Result<Output> {
    let log = crate::server::load_log(path)?;
    let report = compute_traces(&log)?;
    Ok(Output::ok(serde_json::to_string_pretty(&report)? + "\n"))
}
