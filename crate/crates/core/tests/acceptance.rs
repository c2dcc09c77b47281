//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use hoverlink_core::linkage::{DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use hoverlink_core::server::{ErrorCode, TaskBoundary};
use hoverlink_core::session::{snapshot_due, PreviewAction};
use hoverlink_core::sim::{run_to_completion, Phase};
use hoverlink_core::{
    apply_edit, builtin_rubrics, compute_traces, grade, highlight, parse, solve_edit, Axis, Condition, EditRequest,
    EditStatus, EventKind, MarkerId, MarkerSet, MissionResult, Pose, Request, Response, SessionEvent, SessionLog,
    SessionState, SimParams,
};

type Outcome = Result<String, String>;

fn solve(src: &str, request: &EditRequest) -> hoverlink_core::EditProposal {
    solve_edit(&parse(src).unwrap(), &MarkerSet::default(), request, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS)
        .unwrap()
}

fn provenance_oracle() -> Outcome {
    let started = Instant::now();
    let corpus = common::corpus(0x5eed_0001, 500);
    let (mut checked, mut violations, mut over, mut skipped) = (0usize, 0usize, 0usize, 0usize);
    for src in &corpus {
        let base = common::run(src);
        let lit_sets: Vec<BTreeMap<Axis, BTreeSet<usize>>> = base
            .waypoints
            .iter()
            .map(|wp| {
                Axis::ALL
                    .iter()
                    .map(|a| (*a, highlight(&base, wp.index, &[*a]).unwrap().spans.iter().map(|s| s.end).collect()))
                    .collect()
            })
            .collect();
        for (start, end) in common::number_tokens(src) {
            let bumped = src[start..end].parse::<f64>().unwrap() + 1.0;
            let perturbed = common::run(&common::splice(src, start, end, &bumped.to_string()));
            if !perturbed.is_ok() || perturbed.waypoints.len() != base.waypoints.len() {
                skipped += 1;
                continue;
            }
            for (k, (a, b)) in base.waypoints.iter().zip(&perturbed.waypoints).enumerate() {
                for axis in Axis::ALL {
                    checked += 1;
                    let listed = lit_sets[k][&axis].contains(&end);
                    let moved = a.axis(axis).value != b.axis(axis).value;
                    if moved && !listed {
                        violations += 1;
                    }
                    if listed && !moved {
                        over += 1;
                    }
                }
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    let detail = format!(
        "{} programs, {checked} coordinate checks, {violations} completeness violations, {over} zero-influence over-inclusions, {skipped} perturbations skipped, {secs:.1}s",
        corpus.len()
    );
    if violations == 0 && secs < 60.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn edit_round_trip() -> Outcome {
    let corpus = common::corpus(0x5eed_0002, 500);
    let mut rng = common::rng(7);
    let (mut solvable, mut exact, mut best, mut unsolvable, mut broken) = (0usize, 0usize, 0usize, 0usize, Vec::new());
    let mut round = 0;
    while solvable < 500 {
        let src = &corpus[round % corpus.len()];
        round += 1;
        let base = common::run(src);
        let wp = &base.waypoints[rng.gen_range(0..base.waypoints.len())];
        let mut targets = BTreeMap::new();
        for axis in Axis::ALL {
            if (targets.is_empty() || rng.gen_bool(0.25)) && (rng.gen_bool(0.5) || axis == Axis::Yaw) {
                targets.insert(axis, wp.axis(axis).value + rng.gen_range(-4.0..4.0));
            }
        }
        if targets.is_empty() {
            targets.insert(Axis::X, wp.x.value + 1.5);
        }
        let request = EditRequest { waypoint_index: wp.index, targets: targets.clone() };
        let proposal = solve(src, &request);
        match &proposal.status {
            EditStatus::Unsolvable { .. } => {
                unsolvable += 1;
                continue;
            }
            EditStatus::Exact => exact += 1,
            EditStatus::BestEffort { .. } => best += 1,
        }
        solvable += 1;
        let after = common::run(&apply_edit(src, &proposal).unwrap());
        let moved = &after.waypoints[wp.index];
        let ok = match &proposal.status {
            EditStatus::Exact => targets.iter().all(|(a, t)| (moved.axis(*a).value - t).abs() <= 1e-6),
            EditStatus::BestEffort { achieved } => {
                achieved.iter().all(|(a, v)| (moved.axis(*a).value - v).abs() <= 1e-6)
            }
            EditStatus::Unsolvable { .. } => unreachable!(),
        };
        if !ok {
            broken.push(format!("{src:?} {request:?}"));
        }
    }

    let a_plus_a = solve("a = 2\nmoveTo(a + a, 0, 1, 0)", &EditRequest::single(0, Axis::X, 10.0));
    let self_dep_ok = a_plus_a.status == EditStatus::Exact && a_plus_a.iterations <= 16;
    let chain = solve("a = 1\nb = a + a\nmoveTo(b + a, 0, 1, 0)", &EditRequest::single(0, Axis::X, 12.0));
    let chain_ok = chain.status == EditStatus::Exact && chain.iterations <= 16;
    let external = solve("moveTo(marker_x(\"red\"), 0, 1, 0)", &EditRequest::single(0, Axis::X, 5.0));
    let external_ok = matches!(external.status, EditStatus::Unsolvable { .. });

    let detail = format!(
        "{solvable} solvable requests ({exact} exact, {best} best-effort, {unsolvable} unsolvable skipped), {} contract breaks; a+a {} in {} iterations; marker-only {}",
        broken.len(),
        a_plus_a.status.name(),
        a_plus_a.iterations,
        external.status.name()
    );
    if broken.is_empty() && self_dep_ok && chain_ok && external_ok {
        Ok(detail)
    } else {
        Err(format!("{detail}; first break: {:?}", broken.first()))
    }
}

fn drag_single_waypoint() -> Outcome {
    let src = "moveTo(1,\n       2,\n       1,\n       0)";
    let target = 3.25;
    let proposal = solve(src, &EditRequest::single(0, Axis::Y, target));
    let edited = apply_edit(src, &proposal).map_err(|e| e.to_string())?;
    let after = common::run(&edited);
    let wp = &after.waypoints[0];
    let y_span = parse(src).unwrap().number_literals()[1].0;
    let one = proposal.rewrites.len() == 1 && proposal.rewrites[0].span == y_span;
    let exact = (wp.y.value - target).abs() <= 1e-9;
    let others = (wp.x.value, wp.z.value, wp.yaw.value) == (1.0, 1.0, 0.0);
    let detail = format!("{} rewrite(s), y = {} (target {target}), edited line 2 = {:?}", proposal.rewrites.len(), wp.y.value, edited.lines().nth(1).unwrap_or(""));
    if one && exact && others && proposal.status == EditStatus::Exact {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const LOOP_SQUARE: &str = "s = 2
x = 0
y = 0
for i = 1, 4 do
  moveTo(x, y, 1, (i - 1) * 90)
  wait()
  if i == 1 then x = x + s end
  if i == 2 then y = y + s end
  if i == 3 then x = x - s end
end";

fn square_scaling() -> Outcome {
    let before = common::run(LOOP_SQUARE);
    let corner = &before.waypoints[2];
    if (corner.x.value, corner.y.value) != (2.0, 2.0) {
        return Err(format!("fixture corner is ({}, {})", corner.x.value, corner.y.value));
    }
    let request = EditRequest { waypoint_index: 2, targets: BTreeMap::from([(Axis::X, 3.0), (Axis::Y, 3.0)]) };
    let proposal = solve(LOOP_SQUARE, &request);
    let edited = apply_edit(LOOP_SQUARE, &proposal).map_err(|e| e.to_string())?;
    let after = common::run(&edited);
    let pts: Vec<Pose> = after.waypoints.iter().map(|w| w.pose()).collect();
    let d = |a: &Pose, b: &Pose| ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + (a.z - b.z).powi(2)).sqrt();
    let sides: Vec<f64> = (0..4).map(|k| d(&pts[k], &pts[(k + 1) % 4])).collect();
    let diagonals = [d(&pts[0], &pts[2]), d(&pts[1], &pts[3])];
    let geometric = pts.len() == 4
        && sides.iter().all(|s| (s - 3.0).abs() <= 1e-6)
        && diagonals.iter().all(|g| (g - 3.0 * 2f64.sqrt()).abs() <= 1e-6);
    let report = grade(&after, &builtin_rubrics()["mission1"]);
    let graded = report.passed("is_square") == Some(true);
    let detail = format!(
        "first line now {:?}, sides {:?}, is_square {}",
        edited.lines().next().unwrap_or(""),
        sides,
        graded
    );
    if geometric && graded && proposal.status == EditStatus::Exact {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const REFERENCE: &str = "s = 2
h = 1
moveTo(0, 0, h, 0)
wait()
moveTo(s, 0, h, 90)
wait()
moveTo(s, s, h, 180)
wait()
moveTo(0, s, h, 270)
wait()";

fn failing(result: &MissionResult) -> (usize, BTreeSet<String>) {
    let report = grade(result, &builtin_rubrics()["mission1"]);
    let failed = report.per_criterion.iter().filter(|c| !c.passed).map(|c| c.id.clone()).collect();
    (report.points, failed)
}

fn rubric_fidelity() -> Outcome {
    let set = |ids: &[&str]| ids.iter().map(|s| s.to_string()).collect::<BTreeSet<_>>();
    let cases = [
        ("reference", REFERENCE.to_string(), set(&[])),
        ("z = 0", REFERENCE.replace("h = 1", "h = 0"), set(&["flies"])),
        (
            "no angle changes",
            REFERENCE.replace(", 90)", ", 0)").replace(", 180)", ", 0)").replace(", 270)", ", 0)"),
            set(&["angle_changed", "angles_correct"]),
        ),
        ("waits removed", REFERENCE.replace("wait()", ""), set(&["wait_after_move"])),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, src, expected) in cases {
        let (points, failed) = failing(&common::run(&src));
        ok &= failed == expected && points == 6 - expected.len();
        lines.push(format!("{name}: {points}/6 failed {failed:?}"));
    }
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}

fn log_from(events: &[(u64, EventKind)]) -> SessionLog {
    let mut log = SessionLog::new("golden", Condition::ALL[3]);
    for (t, kind) in events {
        log.record(SessionEvent::new(*t, kind.clone())).unwrap();
    }
    log
}

/// Name, log, episodes, organizing s, elaborating s, planning s per task, monitoring.
type Golden = (&'static str, SessionLog, usize, f64, f64, Vec<(&'static str, f64)>, usize);

fn golden_logs() -> Vec<Golden> {
    let pc = |n: u32| EventKind::ProgramChanged { source: format!("moveTo({n}, 0, 1, 0)") };
    let pv = || EventKind::PreviewInteraction { sub: PreviewAction::Orbit };
    let snap = || EventKind::Snapshot { source: String::new() };
    let start = |id: &str| EventKind::TaskStarted { task_id: id.into() };
    let done = |id: &str| EventKind::TaskCompleted { task_id: id.into() };

    let mut a = vec![(0, start("mission1")), (2_000, pc(1))];
    a.extend((1..=9).map(|k| (k * 5_000, pv())));
    a.extend([
        (47_000, pc(2)),
        (50_000, EventKind::SimulationStarted {}),
        (52_000, EventKind::SimulationFinished {}),
        (60_000, done("mission1")),
    ]);

    let b = vec![
        (0, start("mission1")),
        (8_000, pc(1)),
        (10_000, pv()),
        (20_000, pc(2)),
        (25_000, pv()),
        (40_000, pc(3)),
        (41_000, EventKind::SimulationStarted {}),
        (43_000, done("mission1")),
        (50_000, start("mission2")),
        (61_000, pc(4)),
        (62_000, EventKind::SimulationStarted {}),
        (64_000, EventKind::SimulationStarted {}),
        (70_000, done("mission2")),
    ];

    let c = vec![
        (0, pc(0)),
        (3_000, pv()),
        (10_000, start("mission1")),
        (15_000, pv()),
        (20_000, snap()),
        (25_000, snap()),
        (31_000, pv()),
        (33_000, pc(1)),
        (36_000, done("mission1")),
        (40_000, start("mission2")),
        (45_000, pv()),
        (50_000, snap()),
        (55_000, snap()),
    ];

    vec![
        ("long inspection", log_from(&a), 1, 43.0, 60.0, vec![("mission1", 2.0)], 1),
        ("frequent edits", log_from(&b), 0, 0.0, 45.0, vec![("mission1", 8.0), ("mission2", 18.0)], 3),
        ("inspection across tasks", log_from(&c), 1, 31.0, 50.0, vec![("mission1", 33.0), ("mission2", 19.0)], 0),
    ]
}

fn trace_metrics() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, log, episodes, organizing, elaborating, planning, monitoring) in golden_logs() {
        let r = compute_traces(&log).map_err(|e| format!("{name}: {e}"))?;
        let reloaded = compute_traces(&SessionLog::from_ndjson(&log.to_ndjson()).unwrap()).unwrap();
        let planning: BTreeMap<String, f64> = planning.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let good = r.organizing_episodes == episodes
            && r.organizing_seconds == organizing
            && r.elaborating_seconds == elaborating
            && r.planning_seconds == planning
            && r.monitoring_count == monitoring
            && reloaded == r;
        ok &= good;
        lines.push(format!(
            "{name}: {} episode(s) {}s, elaborating {}s, planning {:?}, monitoring {}",
            r.organizing_episodes, r.organizing_seconds, r.elaborating_seconds, r.planning_seconds, r.monitoring_count
        ));
    }
    let boundary = log_from(&[(1_000, EventKind::Snapshot { source: String::new() })]);
    let cadence = !snapshot_due(&boundary, 5_999) && snapshot_due(&boundary, 6_000);
    ok &= cadence;
    lines.push(format!("snapshot due at 5999 ms: {}, at 6000 ms: {}", snapshot_due(&boundary, 5_999), snapshot_due(&boundary, 6_000)));
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}

/// Sends one request through its wire encoding.
fn send(session: &mut SessionState, request: Request, now: u64) -> Response {
    let wire = serde_json::to_string(&request).unwrap();
    let decoded: Request = serde_json::from_str(&wire).unwrap();
    let reply = session.handle(decoded, now);
    serde_json::from_str(&serde_json::to_string(&reply).unwrap()).unwrap()
}

fn condition_gating() -> Outcome {
    let rubrics = Arc::new(builtin_rubrics());
    let mut lines = Vec::new();
    let mut ok = true;
    for condition in Condition::ALL {
        let mut s = SessionState::new(format!("gate-{}-{}", condition.highlights, condition.dynamic_linking), condition, rubrics.clone());
        let mut problems = Vec::new();
        let mut expect_ok = |r: &Response, what: &str| {
            if r.is_error() {
                problems.push(format!("{what}: {r:?}"));
            }
        };
        let mut t = 0;
        let mut next = || {
            t += 1_000;
            t
        };
        let r = send(&mut s, Request::TaskBoundary { boundary: TaskBoundary::Start, task_id: "mission1".into() }, next());
        expect_ok(&r, "task start");
        let r = send(&mut s, Request::SetProgram { source: REFERENCE.into() }, next());
        expect_ok(&r, "set program");
        let r = send(&mut s, Request::PreviewGesture { sub: PreviewAction::Orbit }, next());
        expect_ok(&r, "orbit");
        let r = send(&mut s, Request::DragMarker { id: MarkerId::Green, pose: Pose::new(1.0, 1.0, 0.0, 0.0) }, next());
        expect_ok(&r, "drag marker");

        let h = send(&mut s, Request::QueryHighlight { waypoint_index: 1, axes: vec![] }, next());
        let h_ok = match (&h, condition.highlights) {
            (Response::HighlightResponse { spans, .. }, true) => !spans.is_empty(),
            (Response::Error { code: ErrorCode::FeatureDisabled, .. }, false) => true,
            _ => false,
        };
        let e = send(&mut s, Request::ApplyPreviewEdit(EditRequest::single(1, Axis::X, 3.0)), next());
        let e_ok = match (&e, condition.dynamic_linking) {
            (Response::EditResponse { status: EditStatus::Exact, program, .. }, true) => program.source.starts_with("s = 3"),
            (Response::Error { code: ErrorCode::FeatureDisabled, .. }, false) => s.source() == REFERENCE,
            _ => false,
        };

        let r = send(&mut s, Request::RunSimulation { params: None }, next());
        expect_ok(&r, "run");
        let r = send(&mut s, Request::SimTickRequest { dt: 1_000.0 }, next());
        let finished = matches!(&r, Response::SimFrame(f) if f.phase == Phase::Done);
        let r = send(&mut s, Request::GradeMission { task_id: "mission1".into() }, next());
        let graded = matches!(&r, Response::GradeResponse(g) if g.max_points == 6);
        let r = send(&mut s, Request::TaskBoundary { boundary: TaskBoundary::Complete, task_id: "mission1".into() }, next());
        expect_ok(&r, "task complete");
        let traces = compute_traces(s.log()).is_ok();

        let good = h_ok && e_ok && finished && graded && traces && problems.is_empty();
        ok &= good;
        lines.push(format!(
            "highlights={} linking={}: highlight {}, edit {}{}",
            condition.highlights,
            condition.dynamic_linking,
            if condition.highlights { "served" } else { "FeatureDisabled" },
            if condition.dynamic_linking { "served" } else { "FeatureDisabled" },
            if good { String::new() } else { format!(" [unexpected: h={h:?} e={e:?} {problems:?}]") }
        ));
    }
    if ok {
        Ok(lines.join("; "))
    } else {
        Err(lines.join("; "))
    }
}

fn simulation_conservation() -> Outcome {
    let mut rng = common::rng(0x51u64);
    let mut worst_time = 0.0f64;
    let mut arrival_errors = 0usize;
    for _ in 0..100 {
        let mut lines = Vec::new();
        let mut at = [0.0f64; 4];
        let mut analytic = 0.0;
        let speed = rng.gen_range(0.5..2.0);
        let yaw_rate = rng.gen_range(45.0..180.0);
        for _ in 0..rng.gen_range(1..12) {
            if rng.gen_bool(0.2) {
                let s = rng.gen_range(0..8) as f64 * 0.25;
                lines.push(format!("sleep({s})"));
                analytic += s;
            } else {
                let p = [
                    rng.gen_range(-20..20) as f64 * 0.25,
                    rng.gen_range(-20..20) as f64 * 0.25,
                    rng.gen_range(0..12) as f64 * 0.25,
                    rng.gen_range(-360..720) as f64,
                ];
                lines.push(format!("moveTo({}, {}, {}, {})", p[0], p[1], p[2], p[3]));
                let turn = (p[3] - at[3]).rem_euclid(360.0);
                analytic += turn.min(360.0 - turn) / yaw_rate;
                analytic += ((p[0] - at[0]).powi(2) + (p[1] - at[1]).powi(2) + (p[2] - at[2]).powi(2)).sqrt() / speed;
                at = p;
            }
        }
        let result = common::run(&lines.join("\n"));
        let params = SimParams { speed, yaw_rate, ..Default::default() };
        let dt = rng.gen_range(0.01..0.2);
        let end = run_to_completion(&result, params, dt, 10_000_000).map_err(|e| e.to_string())?;
        worst_time = worst_time.max((end.completed_at.unwrap_or(f64::INFINITY) - analytic).abs());
        let in_order = end.arrivals.len() == result.waypoints.len()
            && end.arrivals.iter().zip(&result.waypoints).all(|(a, w)| a.waypoint == w.index && a.pose == w.pose());
        if !in_order {
            arrival_errors += 1;
        }
    }
    let detail = format!("100 missions, max |sim - analytic| = {worst_time:.3e} s, {arrival_errors} missions with arrival errors");
    if worst_time <= 1e-6 && arrival_errors == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("provenance oracle equivalence", provenance_oracle),
        ("edit round-trip", edit_round_trip),
        ("single waypoint y drag", drag_single_waypoint),
        ("square scaling", square_scaling),
        ("rubric fidelity", rubric_fidelity),
        ("trace metrics", trace_metrics),
        ("condition gating", condition_gating),
        ("simulation conservation", simulation_conservation),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
