//! Inputs shared by the benchmarks.

use hoverlink_core::session::PreviewAction;
use hoverlink_core::{Condition, EventKind, SessionEvent, SessionLog};

/// A mission with a loop, helper arithmetic and `n` square laps.
pub fn looping_program(n: usize) -> String {
    format!(
        "s = 2\nh = 1.5\nfor lap = 1, {n} do\n  for i = 0, 3 do\n    x = 0\n    y = 0\n    if i == 1 then\n      x = s\n    end\n    if i == 2 then\n      x = s\n      y = s\n    end\n    if i == 3 then\n      y = s\n    end\n    moveTo(x + lap * 0.1, y, h, i * 90)\n    wait()\n  end\nend\n"
    )
}

/// A straight-line mission of `n` moves built from shared variables.
pub fn straight_program(n: usize) -> String {
    let mut src = String::from("s = 1.25\nh = 2\n");
    for i in 0..n {
        src.push_str(&format!("moveTo(s * {i} + 0.5, {i} - s, h + {}, {})\nwait()\n", i % 3, (i * 45) % 360));
    }
    src
}

/// A session log with `tasks` tasks, each with edits, previews and runs.
pub fn synthetic_log(tasks: usize) -> SessionLog {
    let condition = Condition { highlights: true, dynamic_linking: true };
    let mut log = SessionLog::new("bench", condition);
    let mut t = 0u64;
    let mut push = |log: &mut SessionLog, dt: u64, kind: EventKind| {
        t += dt;
        log.record(SessionEvent::new(t, kind)).expect("ordered");
    };
    for k in 0..tasks {
        let task_id = format!("mission{}", k % 3 + 1);
        push(&mut log, 2_000, EventKind::TaskStarted { task_id: task_id.clone() });
        for j in 0..20 {
            push(&mut log, 3_000, EventKind::ProgramChanged { source: format!("moveTo({j}, 0, 1, 0)") });
            push(&mut log, 1_500, EventKind::PreviewInteraction { sub: PreviewAction::Orbit });
            if j % 4 == 0 {
                push(&mut log, 1_000, EventKind::SimulationStarted {});
                push(&mut log, 4_000, EventKind::SimulationFinished {});
            }
        }
        push(&mut log, 1_000, EventKind::TaskCompleted { task_id });
    }
    log
}
