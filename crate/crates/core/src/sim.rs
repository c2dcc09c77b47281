//! Preview geometry and a deterministic time-stepped flight simulation.
//!
//! Flight model: each leg first turns in place along the shorter arc at
//! `yaw_rate`, then flies a straight line at constant `speed`. `sleep(t)`
//! holds the pose for `t` seconds. `wait()` costs nothing here since every
//! leg already completes before the next item starts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{MissionResult, Pose};

pub const DEFAULT_SPEED: f64 = 1.0;
pub const DEFAULT_YAW_RATE: f64 = 90.0;

/// Wraps degrees into `[0, 360)`.
pub fn normalize_yaw(deg: f64) -> f64 {
    let r = deg.rem_euclid(360.0);
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Signed shortest rotation from `from` to `to`, in `(-180, 180]` degrees.
pub fn shortest_arc(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
    #[serde(rename = "waypointIndex")]
    pub waypoint_index: usize,
}

/// Static view of the mission: one point per waypoint, one segment per
/// consecutive pair. No timing.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrajectoryGeometry {
    pub points: Vec<GeometryPoint>,
    pub segments: Vec<(usize, usize)>,
}

pub fn build_geometry(result: &MissionResult) -> TrajectoryGeometry {
    let points: Vec<GeometryPoint> = result
        .waypoints
        .iter()
        .map(|w| GeometryPoint {
            x: w.x.value,
            y: w.y.value,
            z: w.z.value,
            yaw: normalize_yaw(w.yaw.value),
            waypoint_index: w.index,
        })
        .collect();
    let segments = points.windows(2).map(|p| (p[0].waypoint_index, p[1].waypoint_index)).collect();
    TrajectoryGeometry { points, segments }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub speed: f64,
    #[serde(rename = "yawRate")]
    pub yaw_rate: f64,
    pub origin: Pose,
}

impl Default for SimParams {
    fn default() -> Self {
        Self { speed: DEFAULT_SPEED, yaw_rate: DEFAULT_YAW_RATE, origin: Pose::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("bad simulation parameters: {0}")]
    BadParams(String),
}

/// One unit of mission execution, in order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "item", rename_all = "snake_case")]
pub enum MissionItem {
    Fly { waypoint: usize, target: Pose },
    Sleep { seconds: f64 },
}

/// Interleaves waypoints and sleeps in execution order.
pub fn mission_items(result: &MissionResult) -> Vec<MissionItem> {
    let mut items = Vec::with_capacity(result.waypoints.len() + result.sleeps.len());
    let sleeps_after = |k: i64| {
        result
            .sleeps
            .iter()
            .filter(move |s| s.after_waypoint == k)
            .map(|s| MissionItem::Sleep { seconds: s.seconds.value })
    };
    items.extend(sleeps_after(-1));
    for wp in &result.waypoints {
        items.push(MissionItem::Fly { waypoint: wp.index, target: wp.pose() });
        items.extend(sleeps_after(wp.index as i64));
    }
    items
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase")]
pub enum Phase {
    Idle,
    Flying {
        #[serde(rename = "toWaypoint")]
        to_waypoint: usize,
    },
    Sleeping {
        until: f64,
    },
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    pub waypoint: usize,
    pub clock: f64,
    pub pose: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub clock: f64,
    pub pose: Pose,
    pub phase: Phase,
    /// Index of the mission item being executed (or next to execute).
    pub cursor: usize,
    pub params: SimParams,
    /// Clock value at which the last item finished.
    pub completed_at: Option<f64>,
    pub arrivals: Vec<Arrival>,
    /// Clock and pose at which the current item began.
    item_start: f64,
    item_origin: Pose,
}

pub fn start(params: SimParams) -> Result<SimState, SimError> {
    if !(params.speed.is_finite() && params.speed > 0.0) {
        return Err(SimError::BadParams(format!("speed must be > 0, got {}", params.speed)));
    }
    if !(params.yaw_rate.is_finite() && params.yaw_rate > 0.0) {
        return Err(SimError::BadParams(format!("yaw rate must be > 0, got {}", params.yaw_rate)));
    }
    if !params.origin.is_finite() {
        return Err(SimError::BadParams("origin pose is not finite".into()));
    }
    Ok(SimState {
        clock: 0.0,
        pose: params.origin,
        phase: Phase::Idle,
        cursor: 0,
        params,
        completed_at: None,
        arrivals: Vec::new(),
        item_start: 0.0,
        item_origin: params.origin,
    })
}

/// Slew time and translation time for one leg.
pub fn leg_times(from: &Pose, to: &Pose, params: &SimParams) -> (f64, f64) {
    let slew = shortest_arc(from.yaw, to.yaw).abs() / params.yaw_rate;
    (slew, from.distance(to) / params.speed)
}

/// Pose `elapsed` seconds into a leg.
fn leg_pose(from: &Pose, to: &Pose, params: &SimParams, elapsed: f64) -> Pose {
    let (slew, travel) = leg_times(from, to, params);
    if elapsed < slew {
        let turn = shortest_arc(from.yaw, to.yaw);
        return Pose { yaw: from.yaw + turn.signum() * params.yaw_rate * elapsed, ..*from };
    }
    let frac = if travel > 0.0 { ((elapsed - slew) / travel).min(1.0) } else { 1.0 };
    Pose::new(
        from.x + (to.x - from.x) * frac,
        from.y + (to.y - from.y) * frac,
        from.z + (to.z - from.z) * frac,
        to.yaw,
    )
}

/// Advances the simulation by `dt` seconds. Time left over after finishing
/// an item flows into the next one. A non-positive `dt` changes nothing.
///
/// Item boundaries fall at `item start + item duration`, so arrival times
/// do not depend on how the run is sliced into steps.
pub fn step(state: &SimState, result: &MissionResult, dt: f64) -> SimState {
    let mut s = state.clone();
    if dt.is_nan() || dt <= 0.0 {
        return s;
    }
    let items = mission_items(result);
    if s.phase == Phase::Idle {
        enter(&mut s, &items);
    }
    let target = s.clock + dt;
    loop {
        match s.phase {
            Phase::Idle => unreachable!("entered above"),
            Phase::Done => {
                s.clock = target;
                break;
            }
            Phase::Sleeping { until } => {
                if until <= target {
                    s.clock = until;
                    s.cursor += 1;
                    enter(&mut s, &items);
                } else {
                    s.clock = target;
                    break;
                }
            }
            Phase::Flying { to_waypoint } => {
                let MissionItem::Fly { target: goal, .. } = items[s.cursor] else {
                    unreachable!("flying phase always points at a fly item");
                };
                let (slew, travel) = leg_times(&s.item_origin, &goal, &s.params);
                let end = s.item_start + slew + travel;
                if end <= target {
                    s.clock = end;
                    s.pose = goal;
                    s.arrivals.push(Arrival { waypoint: to_waypoint, clock: end, pose: goal });
                    s.cursor += 1;
                    enter(&mut s, &items);
                } else {
                    s.clock = target;
                    s.pose = leg_pose(&s.item_origin, &goal, &s.params, target - s.item_start);
                    break;
                }
            }
        }
    }
    s
}

fn enter(s: &mut SimState, items: &[MissionItem]) {
    s.item_start = s.clock;
    s.item_origin = s.pose;
    s.phase = match items.get(s.cursor) {
        None => {
            s.completed_at.get_or_insert(s.clock);
            Phase::Done
        }
        Some(MissionItem::Fly { waypoint, .. }) => Phase::Flying { to_waypoint: *waypoint },
        Some(MissionItem::Sleep { seconds }) => Phase::Sleeping { until: s.clock + seconds },
    };
}

/// Steps with a fixed `dt` until the mission completes or `max_steps` runs out.
pub fn run_to_completion(result: &MissionResult, params: SimParams, dt: f64, max_steps: usize) -> Result<SimState, SimError> {
    let mut state = start(params)?;
    for _ in 0..max_steps {
        if state.phase == Phase::Done {
            break;
        }
        state = step(&state, result, dt);
    }
    Ok(state)
}
