//! Rubric-based grading of a finished mission.
//!
//! Rubrics are data (TOML documents under `rubrics/`), one point per
//! criterion. Mission 1 uses the six typical-error criteria: four distinct
//! waypoints, a square, at least one angle change, correct angles, actual
//! flight (z > 0) and a wait or sleep after every moveTo.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{external_leaves, Axis, MarkerId, MissionResult, Pose};
use crate::sim::{normalize_yaw, shortest_arc};

pub const DEFAULT_POS_TOL: f64 = 0.01;
pub const DEFAULT_YAW_TOL: f64 = 5.0;

#[derive(Debug, Error)]
pub enum RubricError {
    #[error("cannot read rubric {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid rubric document: {0}")]
    Format(#[from] toml::de::Error),
    #[error("rubric {mission}: {message}")]
    Incomplete { mission: String, message: String },
}

fn default_pos_tol() -> f64 {
    DEFAULT_POS_TOL
}

fn default_yaw_tol() -> f64 {
    DEFAULT_YAW_TOL
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RubricParams {
    #[serde(default = "default_pos_tol")]
    pub pos_tol: f64,
    #[serde(default = "default_yaw_tol")]
    pub yaw_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_yaws: Option<Vec<f64>>,
}

impl Default for RubricParams {
    fn default() -> Self {
        Self { pos_tol: DEFAULT_POS_TOL, yaw_tol: DEFAULT_YAW_TOL, expected_yaws: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Predicate {
    MinWaypoints { count: usize },
    DistinctAltitudes { count: usize },
    ReturnsToStart,
    UsesMarker { marker: MarkerId },
    MinTotalSleep { seconds: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum Criterion {
    Flies,
    FourWaypoints,
    IsSquare,
    AngleChanged,
    AnglesCorrect,
    WaitAfterMove,
    Custom { name: String, predicate: Predicate },
}

impl Criterion {
    pub fn name(&self) -> String {
        match self {
            Criterion::Flies => "flies".into(),
            Criterion::FourWaypoints => "four_waypoints".into(),
            Criterion::IsSquare => "is_square".into(),
            Criterion::AngleChanged => "angle_changed".into(),
            Criterion::AnglesCorrect => "angles_correct".into(),
            Criterion::WaitAfterMove => "wait_after_move".into(),
            Criterion::Custom { name, .. } => name.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rubric {
    pub mission_id: String,
    #[serde(default)]
    pub title: String,
    /// Marks rubrics whose criteria are a best guess rather than a known scheme.
    #[serde(default)]
    pub provisional: bool,
    #[serde(default)]
    pub instruction: String,
    #[serde(default)]
    pub params: RubricParams,
    pub criteria: Vec<Criterion>,
}

impl Rubric {
    pub fn max_points(&self) -> usize {
        self.criteria.len()
    }

    pub fn from_toml_str(text: &str) -> Result<Rubric, RubricError> {
        let rubric: Rubric = toml::from_str(text)?;
        rubric.validate()?;
        Ok(rubric)
    }

    fn validate(&self) -> Result<(), RubricError> {
        let fail = |message: String| Err(RubricError::Incomplete { mission: self.mission_id.clone(), message });
        if self.criteria.is_empty() {
            return fail("no criteria".into());
        }
        if !(self.params.pos_tol >= 0.0 && self.params.yaw_tol >= 0.0) {
            return fail("tolerances must be non-negative".into());
        }
        if self.criteria.contains(&Criterion::AnglesCorrect) && self.params.expected_yaws.is_none() {
            return fail("angles_correct needs params.expected_yaws".into());
        }
        Ok(())
    }
}

/// The rubrics shipped in the repository's `rubrics/` directory.
pub fn builtin_rubrics() -> BTreeMap<String, Rubric> {
    [
        include_str!("../../../rubrics/mission1.toml"),
        include_str!("../../../rubrics/mission2.toml"),
        include_str!("../../../rubrics/mission3.toml"),
    ]
    .into_iter()
    .map(|text| {
        let r = Rubric::from_toml_str(text).expect("shipped rubric is valid");
        (r.mission_id.clone(), r)
    })
    .collect()
}

/// Loads every `*.toml` rubric in `dir`, keyed by mission id.
pub fn load_rubric_dir(dir: &Path) -> Result<BTreeMap<String, Rubric>, RubricError> {
    let io = |path: &Path, source| RubricError::Io { path: path.display().to_string(), source };
    let mut out = BTreeMap::new();
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    paths.sort();
    for path in paths {
        let text = fs::read_to_string(&path).map_err(|e| io(&path, e))?;
        let rubric = Rubric::from_toml_str(&text)?;
        out.insert(rubric.mission_id.clone(), rubric);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeReport {
    #[serde(rename = "missionId")]
    pub mission_id: String,
    #[serde(rename = "perCriterion")]
    pub per_criterion: Vec<CriterionResult>,
    pub points: usize,
    #[serde(rename = "maxPoints")]
    pub max_points: usize,
    pub provisional: bool,
}

impl GradeReport {
    pub fn passed(&self, id: &str) -> Option<bool> {
        self.per_criterion.iter().find(|c| c.id == id).map(|c| c.passed)
    }
}

pub fn grade(result: &MissionResult, rubric: &Rubric) -> GradeReport {
    let poses: Vec<Pose> = result.waypoints.iter().map(|w| w.pose()).collect();
    let note = result
        .diagnostics
        .first()
        .map(|d| format!(" (graded partial mission: {d})"))
        .unwrap_or_default();
    let per_criterion: Vec<CriterionResult> = rubric
        .criteria
        .iter()
        .map(|c| {
            let (passed, detail) = check(c, result, &poses, &rubric.params);
            CriterionResult { id: c.name(), passed, detail: detail + &note }
        })
        .collect();
    GradeReport {
        mission_id: rubric.mission_id.clone(),
        points: per_criterion.iter().filter(|c| c.passed).count(),
        max_points: rubric.max_points(),
        per_criterion,
        provisional: rubric.provisional,
    }
}

fn yaw_differs(a: f64, b: f64, tol: f64) -> bool {
    shortest_arc(a, b).abs() > tol
}

/// True when the four points, in order, are the corners of a horizontal
/// square: equal sides, equal diagonals, constant height, non-zero size.
pub fn is_square(points: &[Pose], pos_tol: f64) -> bool {
    let [a, b, c, d] = points else {
        return false;
    };
    let sides = [a.distance(b), b.distance(c), c.distance(d), d.distance(a)];
    let equal_sides = sides.iter().all(|s| (s - sides[0]).abs() <= pos_tol);
    let equal_diagonals = (a.distance(c) - b.distance(d)).abs() <= pos_tol;
    let zs = [a.z, b.z, c.z, d.z];
    let z_span = zs.iter().cloned().fold(f64::MIN, f64::max) - zs.iter().cloned().fold(f64::MAX, f64::min);
    sides[0] > pos_tol && equal_sides && equal_diagonals && z_span <= pos_tol
}

fn check(c: &Criterion, result: &MissionResult, poses: &[Pose], params: &RubricParams) -> (bool, String) {
    let n = poses.len();
    match c {
        Criterion::Flies => match poses.iter().position(|p| p.z > 0.0) {
            Some(i) => (true, format!("waypoint {i} is airborne (z = {})", poses[i].z)),
            None => (false, "no waypoint has z > 0".into()),
        },
        Criterion::FourWaypoints => {
            if n != 4 {
                return (false, format!("expected 4 waypoints, found {n}"));
            }
            for i in 0..n {
                for j in i + 1..n {
                    if poses[i].distance(&poses[j]) <= params.pos_tol {
                        return (false, format!("waypoints {i} and {j} coincide"));
                    }
                }
            }
            (true, "4 distinct waypoints".into())
        }
        Criterion::IsSquare => {
            if n != 4 {
                (false, format!("a square needs exactly 4 waypoints, found {n}"))
            } else if is_square(poses, params.pos_tol) {
                (true, format!("square with side {:.3}", poses[0].distance(&poses[1])))
            } else {
                (false, "waypoints do not form a level square in mission order".into())
            }
        }
        Criterion::AngleChanged => {
            let tol = params.yaw_tol;
            let pair = (0..n).any(|i| (i + 1..n).any(|j| yaw_differs(poses[i].yaw, poses[j].yaw, tol)));
            let from_start = poses.iter().any(|p| yaw_differs(0.0, p.yaw, tol));
            if pair || from_start {
                (true, "yaw is changed at least once".into())
            } else {
                (false, "yaw never changes".into())
            }
        }
        Criterion::AnglesCorrect => {
            let expected = params.expected_yaws.as_deref().unwrap_or_default();
            if expected.len() > n {
                return (false, format!("rubric mismatch: rubric expects {} yaws, mission has {n} waypoints", expected.len()));
            }
            if expected.len() != n {
                return (false, format!("expected {} waypoints with set yaw, found {n}", expected.len()));
            }
            match poses.iter().zip(expected).position(|(p, e)| yaw_differs(p.yaw, *e, params.yaw_tol)) {
                Some(i) => (
                    false,
                    format!("waypoint {i} has yaw {} but {} is expected", normalize_yaw(poses[i].yaw), expected[i]),
                ),
                None => (true, "all yaws as expected".into()),
            }
        }
        Criterion::WaitAfterMove => {
            if n == 0 {
                return (false, "no moveTo executed".into());
            }
            let missing: Vec<usize> = result
                .waypoints
                .iter()
                .filter(|w| !w.followed_by_wait && !result.sleeps.iter().any(|s| s.after_waypoint == w.index as i64))
                .map(|w| w.index)
                .collect();
            if missing.is_empty() {
                (true, "every moveTo is followed by wait or sleep".into())
            } else {
                (false, format!("moveTo without wait/sleep at waypoints {missing:?}"))
            }
        }
        Criterion::Custom { predicate, .. } => check_predicate(predicate, result, poses, params),
    }
}

fn check_predicate(p: &Predicate, result: &MissionResult, poses: &[Pose], params: &RubricParams) -> (bool, String) {
    match p {
        Predicate::MinWaypoints { count } => (poses.len() >= *count, format!("{} waypoints (need {count})", poses.len())),
        Predicate::DistinctAltitudes { count } => {
            let mut levels: Vec<f64> = Vec::new();
            for p in poses {
                if !levels.iter().any(|z| (z - p.z).abs() <= params.pos_tol) {
                    levels.push(p.z);
                }
            }
            (levels.len() >= *count, format!("{} distinct altitudes (need {count})", levels.len()))
        }
        Predicate::ReturnsToStart => match (poses.first(), poses.last()) {
            (Some(a), Some(b)) if poses.len() > 1 => {
                let d = a.distance(b);
                (d <= params.pos_tol, format!("ends {d:.3} m from the first waypoint"))
            }
            _ => (false, "needs at least two waypoints".into()),
        },
        Predicate::UsesMarker { marker } => {
            let used = result.waypoints.iter().any(|w| {
                Axis::ALL.iter().any(|a| external_leaves(&w.axis(*a).trace).iter().any(|(m, _)| m == marker))
            });
            (used, format!("waypoints {} derived from the {marker} marker", if used { "are" } else { "are not" }))
        }
        Predicate::MinTotalSleep { seconds } => {
            let total: f64 = result.sleeps.iter().map(|s| s.seconds.value).sum();
            (total >= *seconds, format!("sleeps total {total} s (need {seconds})"))
        }
    }
}
