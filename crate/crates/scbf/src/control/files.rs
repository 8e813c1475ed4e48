//! On-disk formats: robot, scene, and plan descriptions (JSON) plus the
//! saved barrier-certificate file the `synth` and `check` CLI commands
//! exchange.
//!
//! All four formats carry a `format_version` field (currently
//! [`FORMAT_VERSION`]) and reject unknown keys, so typos fail loudly with
//! serde's line/column diagnostics instead of silently defaulting. Units
//! are SI throughout: meters, radians, seconds, rad/s.
//!
//! A pose is a translation plus roll/pitch/yaw Euler angles,
//! `R = Rz(yaw)·Ry(pitch)·Rx(roll)`; both fields default to zero so a pose
//! of `{}` is the identity. See the README for complete annotated examples
//! of each file.

use std::fs;
use std::path::Path;

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::cbfsyn::QuadraticCbf;
use crate::geometry::{Placement, Shape};
use crate::robot::{Joint, JointConfig, RobotModel};
use crate::sdfield::{Obstacle, ObstacleMotion, Scene};

use super::{ControlError, WaypointPlan};

/// The file-format revision this build reads and writes.
pub const FORMAT_VERSION: u32 = 1;

fn read_to_string(path: &Path) -> Result<String, ControlError> {
    fs::read_to_string(path).map_err(|source| ControlError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_err(origin: &str, detail: impl ToString) -> ControlError {
    ControlError::Parse {
        path: origin.to_string(),
        detail: detail.to_string(),
    }
}

fn check_version(origin: &str, got: u32) -> Result<(), ControlError> {
    if got != FORMAT_VERSION {
        return Err(parse_err(
            origin,
            format!("unsupported format_version {got} (this build reads {FORMAT_VERSION})"),
        ));
    }
    Ok(())
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseFile {
    #[serde(default)]
    translation: [f64; 3],
    /// Roll, pitch, yaw in radians.
    #[serde(default)]
    rotation_rpy: [f64; 3],
}

impl PoseFile {
    fn to_placement(&self) -> Placement {
        let [r, p, y] = self.rotation_rpy;
        Placement {
            rotation: Rotation3::from_euler_angles(r, p, y).into_inner(),
            translation: Vector3::new(
                self.translation[0],
                self.translation[1],
                self.translation[2],
            ),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum ShapeFile {
    Sphere { radius: f64 },
    Box { half_extents: [f64; 3] },
    Capsule { radius: f64, half_length: f64 },
    Hull { points: Vec<[f64; 3]> },
}

impl ShapeFile {
    fn to_shape(&self, origin: &str, at: &str) -> Result<Shape, ControlError> {
        let built = match self {
            ShapeFile::Sphere { radius } => Shape::sphere(*radius),
            ShapeFile::Box { half_extents } => {
                Shape::box_shape(Vector3::new(half_extents[0], half_extents[1], half_extents[2]))
            }
            ShapeFile::Capsule {
                radius,
                half_length,
            } => Shape::capsule(*radius, *half_length),
            ShapeFile::Hull { points } => Shape::hull(
                points
                    .iter()
                    .map(|p| Vector3::new(p[0], p[1], p[2]))
                    .collect(),
            ),
        };
        built.map_err(|e| parse_err(origin, format!("{at}: {e}")))
    }
}

fn default_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JointFile {
    /// Unit rotation axis in the joint's local frame; defaults to +z.
    #[serde(default = "default_axis")]
    axis: [f64; 3],
    /// Fixed transform from the parent link frame to this joint's frame.
    #[serde(default)]
    offset: PoseFile,
    /// Position limits `[lo, hi]` in radians.
    limits: [f64; 2],
    /// Speed bound in rad/s.
    max_speed: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkShapeFile {
    shape: ShapeFile,
    #[serde(default)]
    placement: PoseFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotFile {
    format_version: u32,
    #[serde(default)]
    name: String,
    joints: Vec<JointFile>,
    /// `links[i]` lists the collision shapes of link `i` in its frame; an
    /// empty list means the link carries no geometry.
    links: Vec<Vec<LinkShapeFile>>,
    /// End-effector transform after the last link.
    #[serde(default)]
    flange: PoseFile,
    /// Link pairs exempt from self-collision checks, in addition to the
    /// always-exempt consecutive pairs.
    #[serde(default)]
    exclusions: Vec<[usize; 2]>,
}

/// Parses a robot description from JSON text. `origin` labels error
/// messages (usually the file path).
pub fn parse_robot(text: &str, origin: &str) -> Result<RobotModel, ControlError> {
    let file: RobotFile = serde_json::from_str(text).map_err(|e| parse_err(origin, e))?;
    check_version(origin, file.format_version)?;

    let mut joints = Vec::with_capacity(file.joints.len());
    for j in &file.joints {
        joints.push(Joint {
            axis: Vector3::new(j.axis[0], j.axis[1], j.axis[2]),
            offset: j.offset.to_placement(),
            limits: (j.limits[0], j.limits[1]),
            max_speed: j.max_speed,
        });
    }
    let mut links = Vec::with_capacity(file.links.len());
    for (i, shapes) in file.links.iter().enumerate() {
        let mut converted = Vec::with_capacity(shapes.len());
        for (k, entry) in shapes.iter().enumerate() {
            let shape = entry.shape.to_shape(origin, &format!("links[{i}][{k}]"))?;
            converted.push((shape, entry.placement.to_placement()));
        }
        links.push(converted);
    }
    let exclusions: Vec<(usize, usize)> =
        file.exclusions.iter().map(|&[a, b]| (a, b)).collect();

    RobotModel::new(joints, links, file.flange.to_placement(), &exclusions)
        .map_err(|e| parse_err(origin, e))
}

/// Reads and parses a robot file.
pub fn load_robot(path: &Path) -> Result<RobotModel, ControlError> {
    parse_robot(&read_to_string(path)?, &path.display().to_string())
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KeyFile {
    t: f64,
    pose: PoseFile,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleFile {
    name: String,
    shape: ShapeFile,
    /// Fixed placement; exactly one of `pose` / `schedule` must be given.
    pose: Option<PoseFile>,
    /// Piecewise-linear motion keyframes with strictly increasing times.
    schedule: Option<Vec<KeyFile>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    format_version: u32,
    #[serde(default)]
    obstacles: Vec<ObstacleFile>,
}

/// Parses a scene description from JSON text.
pub fn parse_scene(text: &str, origin: &str) -> Result<Scene, ControlError> {
    let file: SceneFile = serde_json::from_str(text).map_err(|e| parse_err(origin, e))?;
    check_version(origin, file.format_version)?;

    let mut obstacles = Vec::with_capacity(file.obstacles.len());
    for (i, ob) in file.obstacles.iter().enumerate() {
        let at = format!("obstacles[{i}] ({})", ob.name);
        let shape = ob.shape.to_shape(origin, &at)?;
        let motion = match (&ob.pose, &ob.schedule) {
            (Some(pose), None) => ObstacleMotion::Fixed(pose.to_placement()),
            (None, Some(keys)) => ObstacleMotion::Schedule(
                keys.iter().map(|k| (k.t, k.pose.to_placement())).collect(),
            ),
            _ => {
                return Err(parse_err(
                    origin,
                    format!("{at}: give exactly one of `pose` or `schedule`"),
                ))
            }
        };
        obstacles.push(Obstacle {
            name: ob.name.clone(),
            shape,
            motion,
        });
    }
    Scene::new(obstacles).map_err(|e| parse_err(origin, e))
}

/// Reads and parses a scene file.
pub fn load_scene(path: &Path) -> Result<Scene, ControlError> {
    parse_scene(&read_to_string(path)?, &path.display().to_string())
}

fn default_gain() -> f64 {
    2.0
}
fn default_switch_radius() -> f64 {
    0.05
}
fn default_stall_window() -> usize {
    25
}
fn default_stall_eps() -> f64 {
    1e-4
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    format_version: u32,
    /// Initial configuration, radians.
    start: Vec<f64>,
    waypoints: Vec<Vec<f64>>,
    #[serde(default = "default_gain")]
    gain: f64,
    #[serde(default = "default_switch_radius")]
    switch_radius: f64,
    #[serde(default = "default_stall_window")]
    stall_window: usize,
    #[serde(default = "default_stall_eps")]
    stall_eps: f64,
}

/// Parses a plan from JSON text, returning the plan and the start state.
pub fn parse_plan(text: &str, origin: &str) -> Result<(WaypointPlan, JointConfig), ControlError> {
    let file: PlanFile = serde_json::from_str(text).map_err(|e| parse_err(origin, e))?;
    check_version(origin, file.format_version)?;

    let plan = WaypointPlan::new(
        file.waypoints.into_iter().map(JointConfig::new).collect(),
        file.gain,
        file.switch_radius,
        file.stall_window,
        file.stall_eps,
    )
    .map_err(|e| parse_err(origin, e))?;
    if file.start.len() != plan.n() {
        return Err(parse_err(
            origin,
            format!(
                "start has {} joints, waypoints have {}",
                file.start.len(),
                plan.n()
            ),
        ));
    }
    if file.start.iter().any(|v| !v.is_finite()) {
        return Err(parse_err(origin, "start has a non-finite coordinate"));
    }
    Ok((plan, JointConfig::new(file.start)))
}

/// Reads and parses a plan file.
pub fn load_plan(path: &Path) -> Result<(WaypointPlan, JointConfig), ControlError> {
    parse_plan(&read_to_string(path)?, &path.display().to_string())
}

/// A synthesized certificate with everything needed to re-validate it
/// against fresh samples: the barrier itself, the ball it was built for,
/// and the risk bookkeeping of the batch that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateFile {
    pub format_version: u32,
    /// Synthesis state (also the barrier's center), radians.
    pub state: Vec<f64>,
    /// Control period the reachable ball was sized for, seconds.
    pub dt: f64,
    /// Reachable-ball radius, radians.
    pub ball_radius: f64,
    pub cbf: QuadraticCbf,
    /// Scenario batch size behind the certificate.
    pub n_samples: usize,
    /// Complexity (support-constraint count or its dimension bound).
    pub c_star: usize,
    /// Certified upper bound on the violation probability.
    pub eps_hi: f64,
    /// Confidence parameter backing `eps_hi`.
    pub beta: f64,
}

/// Reads and validates a certificate file.
pub fn load_certificate(path: &Path) -> Result<CertificateFile, ControlError> {
    let origin = path.display().to_string();
    let file: CertificateFile =
        serde_json::from_str(&read_to_string(path)?).map_err(|e| parse_err(&origin, e))?;
    check_version(&origin, file.format_version)?;
    if file.state.len() != file.cbf.center().len() {
        return Err(parse_err(
            &origin,
            "state dimension disagrees with the barrier center",
        ));
    }
    if !(file.ball_radius > 0.0 && file.ball_radius.is_finite()) {
        return Err(parse_err(&origin, "ball_radius must be > 0"));
    }
    Ok(file)
}

/// Writes a certificate as pretty-printed JSON.
pub fn save_certificate(path: &Path, file: &CertificateFile) -> Result<(), ControlError> {
    let text = serde_json::to_string_pretty(file).map_err(|e| ControlError::Invalid(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|source| ControlError::Io {
        path: path.display().to_string(),
        source,
    })
}
