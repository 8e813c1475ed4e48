//! Serial kinematic chains: forward kinematics, per-link collision
//! geometry, joint and input limits, and the one-step reachable ball.
//!
//! The chain is a sequence of revolute joints. Link frame `i` is reached
//! from frame `i−1` by the joint's fixed parent offset followed by the
//! rotation about its axis: `F_i = F_{i−1} · O_i · R(axis_i, q_i)`; an
//! optional flange offset after the last link yields the end-effector
//! frame. Collision shapes attach to link frames in local coordinates.

use std::collections::BTreeSet;

use nalgebra::{Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Placement, Shape};

/// Errors from model construction and kinematic queries.
#[derive(Debug, Error)]
pub enum RobotError {
    #[error("configuration has {got} joints, model has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid joint {index}: {reason}")]
    InvalidJoint { index: usize, reason: String },
    #[error("invalid link {index}: {reason}")]
    InvalidLink { index: usize, reason: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// One revolute joint: rotation axis (unit, in the joint's local frame),
/// the fixed transform from the parent link frame to this joint's frame,
/// position limits, and the speed bound `|u_i| ≤ max_speed`.
#[derive(Debug, Clone)]
pub struct Joint {
    pub axis: Vector3<f64>,
    pub offset: Placement,
    /// `(lo, hi)` in radians, `lo < hi`.
    pub limits: (f64, f64),
    /// rad/s, strictly positive.
    pub max_speed: f64,
}

/// A joint-space configuration, radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointConfig {
    pub q: Vec<f64>,
}

impl JointConfig {
    pub fn new(q: Vec<f64>) -> Self {
        JointConfig { q }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Euclidean distance to another configuration of the same dimension.
    pub fn distance(&self, other: &JointConfig) -> f64 {
        self.q
            .iter()
            .zip(other.q.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl From<Vec<f64>> for JointConfig {
    fn from(q: Vec<f64>) -> Self {
        JointConfig { q }
    }
}

/// Ball of configurations reachable within one control period.
#[derive(Debug, Clone)]
pub struct ReachableBall {
    pub center: JointConfig,
    /// radians, strictly positive.
    pub radius: f64,
}

impl ReachableBall {
    /// Whether `x` lies in the (closed) ball.
    pub fn contains(&self, x: &JointConfig) -> bool {
        self.center.distance(x) <= self.radius
    }
}

/// World placements of all link frames plus the end-effector frame.
#[derive(Debug, Clone)]
pub struct FkResult {
    pub links: Vec<Placement>,
    pub end: Placement,
}

/// An immutable robot description: joints, per-link collision shapes, and
/// the pairs of links exempt from self-collision checks.
#[derive(Debug, Clone)]
pub struct RobotModel {
    joints: Vec<Joint>,
    links: Vec<Vec<(Shape, Placement)>>,
    flange: Placement,
    exclusions: BTreeSet<(usize, usize)>,
}

impl RobotModel {
    /// Validates and assembles a model. `links[i]` lists the collision
    /// shapes of link `i` in its frame; `extra_exclusions` adds to the
    /// default exemption of consecutive link pairs (which touch at their
    /// shared joint by construction).
    pub fn new(
        joints: Vec<Joint>,
        links: Vec<Vec<(Shape, Placement)>>,
        flange: Placement,
        extra_exclusions: &[(usize, usize)],
    ) -> Result<Self, RobotError> {
        if joints.is_empty() {
            return Err(RobotError::InvalidJoint {
                index: 0,
                reason: "a chain needs at least one joint".into(),
            });
        }
        if links.len() != joints.len() {
            return Err(RobotError::InvalidLink {
                index: links.len(),
                reason: format!("{} link entries for {} joints", links.len(), joints.len()),
            });
        }
        for (i, j) in joints.iter().enumerate() {
            if (j.axis.norm() - 1.0).abs() > 1e-9 {
                return Err(RobotError::InvalidJoint {
                    index: i,
                    reason: format!("axis must be unit length, norm = {}", j.axis.norm()),
                });
            }
            if !(j.limits.0 < j.limits.1) {
                return Err(RobotError::InvalidJoint {
                    index: i,
                    reason: format!("limits ({}, {}) must satisfy lo < hi", j.limits.0, j.limits.1),
                });
            }
            if !(j.max_speed > 0.0 && j.max_speed.is_finite()) {
                return Err(RobotError::InvalidJoint {
                    index: i,
                    reason: format!("max speed must be positive, got {}", j.max_speed),
                });
            }
            j.offset.validate().map_err(RobotError::Geometry)?;
        }
        for (i, shapes) in links.iter().enumerate() {
            for (_, p) in shapes {
                p.validate().map_err(|e| RobotError::InvalidLink {
                    index: i,
                    reason: e.to_string(),
                })?;
            }
        }
        flange.validate().map_err(RobotError::Geometry)?;

        let n = joints.len();
        let mut exclusions: BTreeSet<(usize, usize)> =
            (1..n).map(|i| (i - 1, i)).collect();
        for &(a, b) in extra_exclusions {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            if hi >= n {
                return Err(RobotError::InvalidLink {
                    index: hi,
                    reason: format!("exclusion ({a},{b}) references a missing link"),
                });
            }
            exclusions.insert((lo, hi));
        }

        Ok(RobotModel {
            joints,
            links,
            flange,
            exclusions,
        })
    }

    /// Joint count.
    pub fn n(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[Joint] {
        &self.joints
    }

    /// Collision shapes of link `i`, local to its frame.
    pub fn link_shapes(&self, i: usize) -> &[(Shape, Placement)] {
        &self.links[i]
    }

    /// Whether the (unordered) link pair is exempt from self-collision.
    pub fn is_excluded(&self, a: usize, b: usize) -> bool {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.exclusions.contains(&key)
    }

    /// Per-joint speed bounds as a vector.
    pub fn speed_bounds(&self) -> Vec<f64> {
        self.joints.iter().map(|j| j.max_speed).collect()
    }

    /// Joint position limits as `(lo, hi)` vectors.
    pub fn limit_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.joints.iter().map(|j| j.limits.0).collect(),
            self.joints.iter().map(|j| j.limits.1).collect(),
        )
    }

    /// Whether `q` lies within all joint limits.
    pub fn within_limits(&self, q: &JointConfig) -> bool {
        q.q.iter()
            .zip(self.joints.iter())
            .all(|(&qi, j)| j.limits.0 <= qi && qi <= j.limits.1)
    }
}

/// World placement of every link frame (and the flange) at configuration
/// `q`: the recursion `F_i = F_{i−1} · O_i · R(axis_i, q_i)`.
pub fn forward_kinematics(model: &RobotModel, q: &JointConfig) -> Result<FkResult, RobotError> {
    if q.len() != model.n() {
        return Err(RobotError::DimensionMismatch {
            expected: model.n(),
            got: q.len(),
        });
    }
    let mut frame = Placement::identity();
    let mut links = Vec::with_capacity(model.n());
    for (joint, &qi) in model.joints.iter().zip(q.q.iter()) {
        let spin = Placement {
            rotation: Rotation3::from_axis_angle(&Unit::new_normalize(joint.axis), qi)
                .into_inner(),
            translation: Vector3::zeros(),
        };
        frame = frame.compose(&joint.offset).compose(&spin);
        links.push(frame);
    }
    let end = frame.compose(&model.flange);
    Ok(FkResult { links, end })
}

/// The ball of configurations reachable from `x_k` within `dt` under the
/// box input bounds: radius `dt·‖u_max‖₂` (the box's far corner), center
/// `x_k`. Over-approximates the one-step reachable set of the kinematic
/// model `x⁺ = x + u·dt`.
pub fn reachable_ball(
    model: &RobotModel,
    x_k: &JointConfig,
    dt: f64,
) -> Result<ReachableBall, RobotError> {
    if x_k.len() != model.n() {
        return Err(RobotError::DimensionMismatch {
            expected: model.n(),
            got: x_k.len(),
        });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(RobotError::InvalidJoint {
            index: 0,
            reason: format!("dt must be positive, got {dt}"),
        });
    }
    let norm = model
        .joints
        .iter()
        .map(|j| j.max_speed * j.max_speed)
        .sum::<f64>()
        .sqrt();
    Ok(ReachableBall {
        center: x_k.clone(),
        radius: dt * norm,
    })
}

// ───────────────────────────── Tests ─────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    /// Two-link planar arm with unit link lengths, z axes.
    fn planar_two_link() -> RobotModel {
        let joint = |offset: Vector3<f64>| Joint {
            axis: Vector3::z(),
            offset: Placement::from_translation(offset),
            limits: (-3.0, 3.0),
            max_speed: 1.0,
        };
        let link_shape = || {
            vec![(
                Shape::capsule(0.05, 0.45).unwrap(),
                Placement {
                    rotation: Rotation3::from_axis_angle(&Vector3::y_axis(), FRAC_PI_2)
                        .into_inner(),
                    translation: Vector3::new(0.5, 0.0, 0.0),
                },
            )]
        };
        RobotModel::new(
            vec![joint(Vector3::zeros()), joint(Vector3::new(1.0, 0.0, 0.0))],
            vec![link_shape(), link_shape()],
            Placement::from_translation(Vector3::new(1.0, 0.0, 0.0)),
            &[],
        )
        .unwrap()
    }

    #[test]
    fn straight_arm_reaches_two_meters() {
        let model = planar_two_link();
        let fk = forward_kinematics(&model, &JointConfig::new(vec![0.0, 0.0])).unwrap();
        assert!((fk.end.translation - Vector3::new(2.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn quarter_turn_points_up() {
        let model = planar_two_link();
        let fk = forward_kinematics(&model, &JointConfig::new(vec![FRAC_PI_2, 0.0])).unwrap();
        assert!((fk.end.translation - Vector3::new(0.0, 2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn elbow_bend() {
        let model = planar_two_link();
        let fk = forward_kinematics(&model, &JointConfig::new(vec![0.0, FRAC_PI_2])).unwrap();
        assert!((fk.end.translation - Vector3::new(1.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let model = planar_two_link();
        assert!(matches!(
            forward_kinematics(&model, &JointConfig::new(vec![0.0])),
            Err(RobotError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    /// Random 7-joint chain for the oracle comparison.
    fn random_chain(rng: &mut impl Rng, n: usize) -> RobotModel {
        let joints: Vec<Joint> = (0..n)
            .map(|_| {
                let axis = loop {
                    let v = Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
                    if v.norm() > 1e-3 {
                        break v.normalize();
                    }
                };
                let rot_axis = loop {
                    let v = Vector3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
                    if v.norm() > 1e-3 {
                        break v.normalize();
                    }
                };
                Joint {
                    axis,
                    offset: Placement {
                        rotation: Rotation3::from_axis_angle(
                            &Unit::new_normalize(rot_axis),
                            rng.gen_range(-3.0..3.0),
                        )
                        .into_inner(),
                        translation: Vector3::from_fn(|_, _| rng.gen_range(-0.4..0.4)),
                    },
                    limits: (-3.0, 3.0),
                    max_speed: rng.gen_range(0.5..2.0),
                }
            })
            .collect();
        let links = vec![vec![]; n];
        RobotModel::new(joints, links, Placement::identity(), &[]).unwrap()
    }

    #[test]
    fn fk_matches_space_frame_oracle() {
        // Oracle: compose world-frame rotations about the joints' home
        // axes (x ↦ R(x − p) + p), applied to the home frames — the
        // space-frame product-of-exponentials form, derived independently
        // of the body-frame recursion under test.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let n = rng.gen_range(2..=7);
            let model = random_chain(&mut rng, n);
            let q = JointConfig::new((0..n).map(|_| rng.gen_range(-3.0..3.0)).collect());

            // Home frames and world axis lines at q = 0.
            let mut home = Vec::with_capacity(n);
            let mut frame = Placement::identity();
            for j in model.joints() {
                frame = frame.compose(&j.offset);
                home.push(frame);
            }

            let fk = forward_kinematics(&model, &q).unwrap();
            for i in 0..n {
                // Apply screw rotations for joints 1..=i in world frame.
                let mut rot = Matrix3::identity();
                let mut trans = Vector3::zeros();
                // Accumulated map x ↦ rot·x + trans, built left to right.
                for (k, joint) in model.joints().iter().take(i + 1).enumerate() {
                    let p = home[k].translation;
                    let w = home[k].rotation * joint.axis;
                    let r = Rotation3::from_axis_angle(&Unit::new_normalize(w), q.q[k])
                        .into_inner();
                    // Append the screw on the right:
                    // new(x) = rot·(r(x−p)+p) + trans
                    trans = rot * (p - r * p) + trans;
                    rot *= r;
                }
                let expect_t = rot * home[i].translation + trans;
                let expect_r = rot * home[i].rotation;
                assert!(
                    (fk.links[i].translation - expect_t).norm() < 1e-10,
                    "link {i} translation"
                );
                assert!(
                    (fk.links[i].rotation - expect_r).abs().max() < 1e-10,
                    "link {i} rotation"
                );
            }
        }
    }

    #[test]
    fn base_rotation_equivariance() {
        // Pre-rotating the first offset rotates every link placement.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let model = random_chain(&mut rng, 5);
        let q = JointConfig::new((0..5).map(|_| rng.gen_range(-2.0..2.0)).collect());
        let base = Rotation3::from_axis_angle(&Vector3::y_axis(), 0.7).into_inner();

        let mut rotated_joints = model.joints().to_vec();
        rotated_joints[0].offset = Placement {
            rotation: base,
            translation: Vector3::zeros(),
        }
        .compose(&rotated_joints[0].offset);
        let rotated =
            RobotModel::new(rotated_joints, vec![vec![]; 5], Placement::identity(), &[]).unwrap();

        let fk0 = forward_kinematics(&model, &q).unwrap();
        let fk1 = forward_kinematics(&rotated, &q).unwrap();
        for (a, b) in fk0.links.iter().zip(fk1.links.iter()) {
            assert!(((base * a.rotation) - b.rotation).abs().max() < 1e-12);
            assert!((base * a.translation - b.translation).norm() < 1e-12);
        }
    }

    #[test]
    fn reachable_ball_radius_analytic() {
        let model = planar_two_link(); // u_max = (1,1)
        let ball = reachable_ball(&model, &JointConfig::new(vec![0.1, 0.2]), 0.01).unwrap();
        assert!((ball.radius - 0.01 * 2.0_f64.sqrt()).abs() < 1e-15);

        // Asymmetric bounds: far corner of the box by enumeration.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut chain = random_chain(&mut rng, 2);
        chain.joints[0].max_speed = 1.0;
        chain.joints[1].max_speed = 3.0;
        let ball = reachable_ball(&chain, &JointConfig::new(vec![0.0, 0.0]), 0.1).unwrap();
        let corner_max = [(1.0, 3.0), (1.0, -3.0), (-1.0, 3.0), (-1.0, -3.0)]
            .iter()
            .map(|&(a, b): &(f64, f64)| (a * a + b * b).sqrt())
            .fold(0.0_f64, f64::max);
        assert!((ball.radius - 0.1 * corner_max).abs() < 1e-12);
    }

    #[test]
    fn reachable_ball_contains_all_admissible_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = random_chain(&mut rng, 7);
        let x = JointConfig::new(vec![0.0; 7]);
        let dt = 0.05;
        let ball = reachable_ball(&model, &x, dt).unwrap();
        for _ in 0..1000 {
            let u: Vec<f64> = model
                .joints()
                .iter()
                .map(|j| rng.gen_range(-j.max_speed..j.max_speed))
                .collect();
            let step = JointConfig::new(u.iter().map(|ui| ui * dt).collect());
            assert!(ball.contains(&step), "admissible step escaped the ball");
        }
    }

    #[test]
    fn consecutive_links_excluded_by_default() {
        let model = planar_two_link();
        assert!(model.is_excluded(0, 1));
        assert!(model.is_excluded(1, 0));
    }

    #[test]
    fn validation_rejects_bad_models() {
        let good = Joint {
            axis: Vector3::z(),
            offset: Placement::identity(),
            limits: (-1.0, 1.0),
            max_speed: 1.0,
        };
        // Non-unit axis.
        let mut bad = good.clone();
        bad.axis *= 2.0;
        assert!(RobotModel::new(vec![bad], vec![vec![]], Placement::identity(), &[]).is_err());
        // Inverted limits.
        let mut bad = good.clone();
        bad.limits = (1.0, -1.0);
        assert!(RobotModel::new(vec![bad], vec![vec![]], Placement::identity(), &[]).is_err());
        // Zero speed.
        let mut bad = good.clone();
        bad.max_speed = 0.0;
        assert!(RobotModel::new(vec![bad], vec![vec![]], Placement::identity(), &[]).is_err());
        // Exclusion out of range.
        assert!(
            RobotModel::new(vec![good], vec![vec![]], Placement::identity(), &[(0, 3)]).is_err()
        );
    }
}
