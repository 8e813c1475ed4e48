//! Composed signed-distance layer: arm-vs-obstacle distance, link-vs-link
//! self-distance, and their pointwise minimum, which defines the safe set
//! `{q : sd_ov(q) ≥ 0}`.
//!
//! Vacuous minima (no obstacles, no checkable link pair) return the finite
//! sentinel [`SD_SENTINEL`] instead of `+∞` so downstream constraint data
//! stays in ordinary arithmetic.

use nalgebra::{UnitQuaternion, Vector3};
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{signed_distance, GeometryError, Placement, Shape};
use crate::robot::{forward_kinematics, JointConfig, RobotError, RobotModel};

/// Stand-in for `+∞` when a distance minimum ranges over an empty set: far
/// beyond any coefficient the synthesis layer can be asked to absorb, yet
/// finite for plain float comparisons.
pub use crate::consts::SD_SENTINEL;

#[derive(Debug, Error)]
pub enum SdfError {
    #[error("robot error: {0}")]
    Robot(#[from] RobotError),
    #[error("geometry error: {0}")]
    Geometry(#[from] GeometryError),
    #[error("obstacle {index} ({name:?}): {reason}")]
    InvalidObstacle {
        index: usize,
        name: String,
        reason: String,
    },
}

/// Obstacle pose over time: parked, or keyframed on the simulation horizon.
#[derive(Debug, Clone)]
pub enum ObstacleMotion {
    Fixed(Placement),
    /// Piecewise-linear keyframes `(t, placement)` with strictly increasing
    /// times; translation is interpolated linearly, rotation by slerp, and
    /// the pose is held constant before the first and after the last key.
    Schedule(Vec<(f64, Placement)>),
}

#[derive(Debug, Clone)]
pub struct Obstacle {
    pub name: String,
    pub shape: Shape,
    pub motion: ObstacleMotion,
}

/// The workspace clutter the arm must avoid. Construction validates every
/// placement and schedule once so per-sample evaluation can stay cheap.
#[derive(Debug, Clone, Default)]
pub struct Scene {
    obstacles: Vec<Obstacle>,
}

impl Scene {
    pub fn empty() -> Self {
        Scene { obstacles: Vec::new() }
    }

    pub fn new(obstacles: Vec<Obstacle>) -> Result<Self, SdfError> {
        for (index, ob) in obstacles.iter().enumerate() {
            let bad = |reason: String| SdfError::InvalidObstacle {
                index,
                name: ob.name.clone(),
                reason,
            };
            if ob.name.is_empty() {
                return Err(bad("name must be non-empty".into()));
            }
            match &ob.motion {
                ObstacleMotion::Fixed(p) => p.validate()?,
                ObstacleMotion::Schedule(keys) => {
                    if keys.is_empty() {
                        return Err(bad("schedule needs at least one keyframe".into()));
                    }
                    for (t, p) in keys {
                        if !t.is_finite() {
                            return Err(bad(format!("non-finite keyframe time {t}")));
                        }
                        p.validate()?;
                    }
                    if keys.windows(2).any(|w| w[1].0 <= w[0].0) {
                        return Err(bad("keyframe times must be strictly increasing".into()));
                    }
                }
            }
        }
        Ok(Scene { obstacles })
    }

    pub fn obstacles(&self) -> &[Obstacle] {
        &self.obstacles
    }

    pub fn len(&self) -> usize {
        self.obstacles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obstacles.is_empty()
    }

    /// Scene with obstacle `index` deleted (for ablation and analysis).
    pub fn without(&self, index: usize) -> Scene {
        let mut obstacles = self.obstacles.clone();
        if index < obstacles.len() {
            obstacles.remove(index);
        }
        Scene { obstacles }
    }

    /// Pose of obstacle `index` at time `t`.
    pub fn placement_at(&self, index: usize, t: f64) -> Placement {
        match &self.obstacles[index].motion {
            ObstacleMotion::Fixed(p) => *p,
            ObstacleMotion::Schedule(keys) => {
                if t <= keys[0].0 {
                    return keys[0].1;
                }
                let last = keys.len() - 1;
                if t >= keys[last].0 {
                    return keys[last].1;
                }
                let i = keys.partition_point(|(tk, _)| *tk <= t) - 1;
                let (t0, p0) = &keys[i];
                let (t1, p1) = &keys[i + 1];
                let s = (t - t0) / (t1 - t0);
                let q0 = UnitQuaternion::from_matrix(&p0.rotation);
                let q1 = UnitQuaternion::from_matrix(&p1.rotation);
                Placement {
                    rotation: q0.slerp(&q1, s).to_rotation_matrix().into_inner(),
                    translation: p0.translation + s * (p1.translation - p0.translation),
                }
            }
        }
    }
}

/// Which body pair realizes a reported minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActivePair {
    /// `(link index, obstacle index)`.
    LinkObstacle(usize, usize),
    /// `(lower link index, higher link index)`.
    LinkLink(usize, usize),
}

/// Closest-point evidence for the minimizing pair of a distance query.
#[derive(Debug, Clone, Copy)]
pub struct WitnessInfo {
    pub pair: ActivePair,
    /// Closest point on the first body of the pair, world frame.
    pub on_a: Vector3<f64>,
    /// Closest point on the second body, world frame.
    pub on_b: Vector3<f64>,
    /// Minimal-translation direction for the first body.
    pub normal: Vector3<f64>,
    pub converged: bool,
}

/// One full distance evaluation at a configuration.
#[derive(Debug, Clone)]
pub struct SdfSample {
    pub state: JointConfig,
    /// Minimum arm-vs-obstacle distance ([`SD_SENTINEL`] when no obstacles).
    pub sd_out: f64,
    /// Minimum self-collision distance over non-exempt link pairs
    /// ([`SD_SENTINEL`] when every pair is exempt).
    pub sd_in: f64,
    /// `min(sd_out, sd_in)` — bitwise equal to whichever operand wins.
    pub sd_ov: f64,
    pub outer_witness: Option<WitnessInfo>,
    pub inner_witness: Option<WitnessInfo>,
}

impl SdfSample {
    /// The configuration is collision-free (Eq.-9-style safe-set test).
    pub fn is_safe(&self) -> bool {
        self.sd_ov >= 0.0
    }

    /// Witness of the pair achieving `sd_ov`.
    pub fn active_witness(&self) -> Option<&WitnessInfo> {
        if self.sd_in < self.sd_out {
            self.inner_witness.as_ref()
        } else {
            self.outer_witness.as_ref()
        }
    }
}

/// Minimum over every shape of link `a` against every shape of link `b`
/// (or of an obstacle), with the winning witness. `None` means one side
/// carries no collision geometry.
fn pair_distance(
    shapes_a: &[(Shape, Placement)],
    frame_a: &Placement,
    shapes_b: &[(Shape, Placement)],
    frame_b: &Placement,
) -> Result<Option<(f64, Vector3<f64>, Vector3<f64>, Vector3<f64>, bool)>, GeometryError> {
    let mut best: Option<(f64, Vector3<f64>, Vector3<f64>, Vector3<f64>, bool)> = None;
    for (sa, la) in shapes_a {
        let pa = frame_a.compose(la);
        for (sb, lb) in shapes_b {
            let pb = frame_b.compose(lb);
            let r = signed_distance(sa, &pa, sb, &pb)?;
            if best.is_none() || r.signed_distance < best.as_ref().unwrap().0 {
                best = Some((
                    r.signed_distance,
                    r.witness_a,
                    r.witness_b,
                    r.normal,
                    r.converged,
                ));
            }
        }
    }
    Ok(best)
}

/// Minimum signed distance from any link to any obstacle at time `t`.
/// Returns [`SD_SENTINEL`] and no witness when the scene is empty.
pub fn outer_sdf(
    model: &RobotModel,
    q: &JointConfig,
    scene: &Scene,
    t: f64,
) -> Result<(f64, Option<WitnessInfo>), SdfError> {
    let fk = forward_kinematics(model, q)?;
    outer_sdf_at(model, &fk.links, scene, t)
}

fn outer_sdf_at(
    model: &RobotModel,
    frames: &[Placement],
    scene: &Scene,
    t: f64,
) -> Result<(f64, Option<WitnessInfo>), SdfError> {
    let mut sd = SD_SENTINEL;
    let mut witness = None;
    for (i, frame) in frames.iter().enumerate() {
        let shapes = model.link_shapes(i);
        if shapes.is_empty() {
            continue;
        }
        for (j, ob) in scene.obstacles().iter().enumerate() {
            let pose = scene.placement_at(j, t);
            let ob_shapes = [(ob.shape.clone(), Placement::identity())];
            if let Some((d, on_a, on_b, normal, converged)) =
                pair_distance(shapes, frame, &ob_shapes, &pose)?
            {
                if d < sd {
                    sd = d;
                    witness = Some(WitnessInfo {
                        pair: ActivePair::LinkObstacle(i, j),
                        on_a,
                        on_b,
                        normal,
                        converged,
                    });
                }
            }
        }
    }
    Ok((sd, witness))
}

/// Minimum signed distance over non-exempt link pairs. Returns
/// [`SD_SENTINEL`] and no witness when every pair is exempt.
pub fn inner_sdf(
    model: &RobotModel,
    q: &JointConfig,
) -> Result<(f64, Option<WitnessInfo>), SdfError> {
    let fk = forward_kinematics(model, q)?;
    inner_sdf_at(model, &fk.links)
}

fn inner_sdf_at(
    model: &RobotModel,
    frames: &[Placement],
) -> Result<(f64, Option<WitnessInfo>), SdfError> {
    let n = model.n();
    let mut sd = SD_SENTINEL;
    let mut witness = None;
    for a in 0..n {
        let shapes_a = model.link_shapes(a);
        if shapes_a.is_empty() {
            continue;
        }
        for b in (a + 1)..n {
            if model.is_excluded(a, b) {
                continue;
            }
            let shapes_b = model.link_shapes(b);
            if shapes_b.is_empty() {
                continue;
            }
            if let Some((d, on_a, on_b, normal, converged)) =
                pair_distance(shapes_a, &frames[a], shapes_b, &frames[b])?
            {
                if d < sd {
                    sd = d;
                    witness = Some(WitnessInfo {
                        pair: ActivePair::LinkLink(a, b),
                        on_a,
                        on_b,
                        normal,
                        converged,
                    });
                }
            }
        }
    }
    Ok((sd, witness))
}

/// Full evaluation: one forward-kinematics pass feeding both distance
/// minima and their exact minimum.
pub fn overall_sdf(
    model: &RobotModel,
    q: &JointConfig,
    scene: &Scene,
    t: f64,
) -> Result<SdfSample, SdfError> {
    let fk = forward_kinematics(model, q)?;
    let (sd_out, outer_witness) = outer_sdf_at(model, &fk.links, scene, t)?;
    let (sd_in, inner_witness) = inner_sdf_at(model, &fk.links)?;
    let sd_ov = if sd_in < sd_out { sd_in } else { sd_out };
    Ok(SdfSample {
        state: q.clone(),
        sd_out,
        sd_in,
        sd_ov,
        outer_witness,
        inner_witness,
    })
}

/// Evaluates a batch of configurations in parallel. This is the hot loop
/// of each control step (one evaluation per scenario sample); outputs are
/// index-aligned with the inputs and identical to sequential evaluation
/// regardless of scheduling.
pub fn overall_sdf_batch(
    model: &RobotModel,
    qs: &[JointConfig],
    scene: &Scene,
    t: f64,
) -> Result<Vec<SdfSample>, SdfError> {
    let evaluated: Vec<Result<SdfSample, SdfError>> = qs
        .par_iter()
        .map(|q| overall_sdf(model, q, scene, t))
        .collect();
    // Fold sequentially so the reported error (if any) is the first by
    // input order, independent of the parallel schedule.
    evaluated.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot::Joint;
    use nalgebra::{Matrix3, Vector3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn revolute_z(offset_x: f64) -> Joint {
        Joint {
            axis: Vector3::z(),
            offset: Placement::from_translation(Vector3::new(offset_x, 0.0, 0.0)),
            limits: (-std::f64::consts::PI, std::f64::consts::PI),
            max_speed: 1.0,
        }
    }

    fn sphere_link(radius: f64) -> Vec<(Shape, Placement)> {
        vec![(Shape::sphere(radius).unwrap(), Placement::identity())]
    }

    fn single_sphere_arm() -> RobotModel {
        RobotModel::new(
            vec![revolute_z(0.0)],
            vec![sphere_link(0.1)],
            Placement::identity(),
            &[],
        )
        .unwrap()
    }

    fn fixed_sphere(name: &str, radius: f64, at: Vector3<f64>) -> Obstacle {
        Obstacle {
            name: name.into(),
            shape: Shape::sphere(radius).unwrap(),
            motion: ObstacleMotion::Fixed(Placement::from_translation(at)),
        }
    }

    #[test]
    fn two_unit_tenth_spheres_one_meter_apart() {
        let model = single_sphere_arm();
        let scene =
            Scene::new(vec![fixed_sphere("ball", 0.1, Vector3::new(1.0, 0.0, 0.0))]).unwrap();
        let q = JointConfig::new(vec![0.0]);
        let (sd, w) = outer_sdf(&model, &q, &scene, 0.0).unwrap();
        assert!((sd - 0.8).abs() < 1e-12, "sd = {sd}");
        assert_eq!(w.unwrap().pair, ActivePair::LinkObstacle(0, 0));

        let sample = overall_sdf(&model, &q, &scene, 0.0).unwrap();
        assert_eq!(sample.sd_out, sd);
        // A one-link arm has no checkable pair.
        assert_eq!(sample.sd_in, SD_SENTINEL);
        assert_eq!(sample.sd_ov, sd);
        assert!(sample.is_safe());
    }

    #[test]
    fn empty_scene_returns_sentinel() {
        let model = single_sphere_arm();
        let q = JointConfig::new(vec![0.0]);
        let (sd, w) = outer_sdf(&model, &q, &Scene::empty(), 0.0).unwrap();
        assert_eq!(sd, SD_SENTINEL);
        assert!(w.is_none());
        let sample = overall_sdf(&model, &q, &Scene::empty(), 0.0).unwrap();
        assert_eq!(sample.sd_ov, SD_SENTINEL);
        assert!(sample.active_witness().is_none());
    }

    #[test]
    fn adjacent_only_arm_has_vacuous_inner_distance() {
        let model = RobotModel::new(
            vec![revolute_z(0.0), revolute_z(1.0)],
            vec![sphere_link(0.1), sphere_link(0.1)],
            Placement::identity(),
            &[],
        )
        .unwrap();
        let (sd, w) = inner_sdf(&model, &JointConfig::new(vec![0.3, -0.7])).unwrap();
        assert_eq!(sd, SD_SENTINEL);
        assert!(w.is_none());
    }

    #[test]
    fn folded_three_link_gap() {
        // Three unit links with 0.1-radius spherical collision bodies at
        // their frame origins. Fold the elbow so the origin of link 3 sits
        // 0.25 m from the origin of link 1: the only non-exempt pair is
        // (0, 2) and its gap is 0.25 − 0.2 = 0.05 m.
        let model = RobotModel::new(
            vec![revolute_z(0.0), revolute_z(1.0), revolute_z(1.0)],
            vec![sphere_link(0.1), sphere_link(0.1), sphere_link(0.1)],
            Placement::identity(),
            &[],
        )
        .unwrap();
        let q2 = (-0.96875f64).acos();
        let q = JointConfig::new(vec![0.0, q2, 0.0]);
        let (sd, w) = inner_sdf(&model, &q).unwrap();
        assert!((sd - 0.05).abs() < 1e-9, "gap = {sd}");
        assert_eq!(w.unwrap().pair, ActivePair::LinkLink(0, 2));

        // Straightened out, the same pair is 2 m apart center-to-center.
        let (sd_straight, _) = inner_sdf(&model, &JointConfig::new(vec![0.0; 3])).unwrap();
        assert!((sd_straight - 1.8).abs() < 1e-9);
    }

    #[test]
    fn overall_min_is_bitwise_one_of_the_inputs() {
        let model = RobotModel::new(
            vec![revolute_z(0.0), revolute_z(1.0), revolute_z(1.0)],
            vec![sphere_link(0.1), sphere_link(0.1), sphere_link(0.1)],
            Placement::identity(),
            &[],
        )
        .unwrap();
        let scene = Scene::new(vec![
            fixed_sphere("a", 0.2, Vector3::new(0.0, 1.7, 0.3)),
            fixed_sphere("b", 0.15, Vector3::new(-1.0, 0.4, 0.0)),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..50 {
            let q = JointConfig::new((0..3).map(|_| rng.gen_range(-3.0..3.0)).collect());
            let s = overall_sdf(&model, &q, &scene, 0.0).unwrap();
            assert!(
                s.sd_ov.to_bits() == s.sd_out.to_bits()
                    || s.sd_ov.to_bits() == s.sd_in.to_bits()
            );
            assert_eq!(s.sd_ov, s.sd_out.min(s.sd_in));
            // Active witness pair type matches which side won.
            if s.sd_in < s.sd_out {
                assert!(matches!(
                    s.active_witness().unwrap().pair,
                    ActivePair::LinkLink(_, _)
                ));
            } else if s.outer_witness.is_some() {
                assert!(matches!(
                    s.active_witness().unwrap().pair,
                    ActivePair::LinkObstacle(_, _)
                ));
            }
        }
    }

    #[test]
    fn matches_exhaustive_pair_enumeration() {
        // Oracle: enumerate every (link shape, obstacle) and (link, link)
        // pair directly from the FK frames, in reversed order to decouple
        // from the implementation's traversal.
        let model = RobotModel::new(
            vec![revolute_z(0.0), revolute_z(0.8), revolute_z(0.6)],
            vec![
                vec![
                    (
                        Shape::capsule(0.06, 0.4).unwrap(),
                        Placement {
                            rotation: Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0),
                            translation: Vector3::new(0.4, 0.0, 0.0),
                        },
                    ),
                    (Shape::sphere(0.09).unwrap(), Placement::identity()),
                ],
                sphere_link(0.08),
                vec![(
                    Shape::box_shape(Vector3::new(0.15, 0.05, 0.05)).unwrap(),
                    Placement::identity(),
                )],
            ],
            Placement::identity(),
            &[],
        )
        .unwrap();
        let scene = Scene::new(vec![
            fixed_sphere("s", 0.2, Vector3::new(0.9, 0.5, 0.1)),
            Obstacle {
                name: "slab".into(),
                shape: Shape::box_shape(Vector3::new(0.3, 0.3, 0.02)).unwrap(),
                motion: ObstacleMotion::Fixed(Placement::from_translation(Vector3::new(
                    -0.5, 0.6, 0.0,
                ))),
            },
            fixed_sphere("t", 0.1, Vector3::new(0.2, -0.9, -0.2)),
            fixed_sphere("u", 0.05, Vector3::new(1.4, -0.3, 0.4)),
        ])
        .unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(97);
        for _ in 0..25 {
            let q = JointConfig::new((0..3).map(|_| rng.gen_range(-3.0..3.0)).collect());
            let fk = forward_kinematics(&model, &q).unwrap();

            let mut oracle_out = SD_SENTINEL;
            for j in (0..scene.len()).rev() {
                let pose = scene.placement_at(j, 0.0);
                for i in (0..model.n()).rev() {
                    for (shape, local) in model.link_shapes(i).iter().rev() {
                        let d = signed_distance(
                            shape,
                            &fk.links[i].compose(local),
                            &scene.obstacles()[j].shape,
                            &pose,
                        )
                        .unwrap()
                        .signed_distance;
                        oracle_out = oracle_out.min(d);
                    }
                }
            }
            let mut oracle_in = SD_SENTINEL;
            for a in (0..model.n()).rev() {
                for b in (0..a).rev() {
                    if model.is_excluded(b, a) {
                        continue;
                    }
                    for (sa, la) in model.link_shapes(a) {
                        for (sb, lb) in model.link_shapes(b) {
                            let d = signed_distance(
                                sa,
                                &fk.links[a].compose(la),
                                sb,
                                &fk.links[b].compose(lb),
                            )
                            .unwrap()
                            .signed_distance;
                            oracle_in = oracle_in.min(d);
                        }
                    }
                }
            }

            let s = overall_sdf(&model, &q, &scene, 0.0).unwrap();
            assert!((s.sd_out - oracle_out).abs() < 1e-9, "outer mismatch");
            assert!((s.sd_in - oracle_in).abs() < 1e-9, "inner mismatch");
        }
    }

    #[test]
    fn removing_an_obstacle_never_decreases_outer_distance() {
        let model = RobotModel::new(
            vec![revolute_z(0.0), revolute_z(1.0)],
            vec![sphere_link(0.1), sphere_link(0.1)],
            Placement::identity(),
            &[],
        )
        .unwrap();
        let scene = Scene::new(vec![
            fixed_sphere("a", 0.3, Vector3::new(1.2, 0.8, 0.0)),
            fixed_sphere("b", 0.2, Vector3::new(-0.7, 0.5, 0.2)),
            fixed_sphere("c", 0.25, Vector3::new(0.3, -1.1, -0.1)),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let q = JointConfig::new((0..2).map(|_| rng.gen_range(-3.0..3.0)).collect());
            let (full, _) = outer_sdf(&model, &q, &scene, 0.0).unwrap();
            for j in 0..scene.len() {
                let (ablated, _) = outer_sdf(&model, &q, &scene.without(j), 0.0).unwrap();
                assert!(ablated >= full - 1e-12);
            }
        }
    }

    #[test]
    fn sign_change_is_bracketed_by_bisection() {
        // Two-link arm versus a box: q_hit drives the elbow link into the
        // box, q_free swings it away. Bisect the segment between them.
        let model = RobotModel::new(
            vec![revolute_z(0.0), revolute_z(1.0)],
            vec![sphere_link(0.1), sphere_link(0.1)],
            Placement::identity(),
            &[],
        )
        .unwrap();
        let scene = Scene::new(vec![Obstacle {
            name: "wall".into(),
            shape: Shape::box_shape(Vector3::new(0.1, 0.5, 0.5)).unwrap(),
            motion: ObstacleMotion::Fixed(Placement::from_translation(Vector3::new(
                1.05, 0.0, 0.0,
            ))),
        }])
        .unwrap();

        // The elbow sphere sits at (cos q1, sin q1): inside the wall at
        // q1 = 0, swung clear at q1 = 2.
        let q_hit = JointConfig::new(vec![0.0, 0.0]);
        let q_free = JointConfig::new(vec![2.0, 0.0]);
        let sd_at = |s: f64| {
            let q = JointConfig::new(
                q_hit
                    .q
                    .iter()
                    .zip(q_free.q.iter())
                    .map(|(a, b)| a + s * (b - a))
                    .collect(),
            );
            overall_sdf(&model, &q, &scene, 0.0).unwrap().sd_ov
        };
        assert!(sd_at(0.0) < 0.0);
        assert!(sd_at(1.0) > 0.0);

        // The parameter runs over a segment of length 2 rad, so collapsing
        // the bracket to 5e-7 localizes the crossing to 1e-6 rad.
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while (hi - lo) * 2.0 > 1e-6 {
            let mid = 0.5 * (lo + hi);
            if sd_at(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // Bracket collapsed to 1e-6 rad with signs preserved; the distance
        // at the crossing is zero up to the local Lipschitz constant.
        assert!(sd_at(lo) < 0.0 && sd_at(hi) >= 0.0);
        assert!(sd_at(0.5 * (lo + hi)).abs() < 1e-4);
    }

    #[test]
    fn batch_matches_sequential_evaluation() {
        let model = RobotModel::new(
            vec![revolute_z(0.0), revolute_z(1.0)],
            vec![sphere_link(0.1), sphere_link(0.1)],
            Placement::identity(),
            &[],
        )
        .unwrap();
        let scene =
            Scene::new(vec![fixed_sphere("a", 0.3, Vector3::new(1.2, 0.8, 0.0))]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let qs: Vec<JointConfig> = (0..128)
            .map(|_| JointConfig::new((0..2).map(|_| rng.gen_range(-3.0..3.0)).collect()))
            .collect();
        let batch = overall_sdf_batch(&model, &qs, &scene, 0.0).unwrap();
        assert_eq!(batch.len(), qs.len());
        for (q, s) in qs.iter().zip(&batch) {
            let seq = overall_sdf(&model, q, &scene, 0.0).unwrap();
            assert_eq!(s.sd_ov.to_bits(), seq.sd_ov.to_bits());
            assert_eq!(s.sd_out.to_bits(), seq.sd_out.to_bits());
            assert_eq!(s.sd_in.to_bits(), seq.sd_in.to_bits());
            assert_eq!(s.state.q, q.q);
        }
    }

    #[test]
    fn scheduled_obstacle_interpolates_translation() {
        let model = single_sphere_arm();
        let start = Placement::from_translation(Vector3::new(2.0, 0.0, 0.0));
        let end = Placement::from_translation(Vector3::new(0.5, 0.0, 0.0));
        let scene = Scene::new(vec![Obstacle {
            name: "drifter".into(),
            shape: Shape::sphere(0.1).unwrap(),
            motion: ObstacleMotion::Schedule(vec![(0.0, start), (1.0, end)]),
        }])
        .unwrap();
        let q = JointConfig::new(vec![0.0]);
        let sd = |t: f64| outer_sdf(&model, &q, &scene, t).unwrap().0;
        assert!((sd(0.0) - 1.8).abs() < 1e-12);
        assert!((sd(1.0) - 0.3).abs() < 1e-12);
        // Midpoint: translation lerps to x = 1.25.
        assert!((sd(0.5) - 1.05).abs() < 1e-12);
        // Held outside the keyframe span.
        assert!((sd(-5.0) - sd(0.0)).abs() < 1e-15);
        assert!((sd(9.0) - sd(1.0)).abs() < 1e-15);
        // Approach is monotone in time.
        let mut prev = sd(0.0);
        for k in 1..=20 {
            let now = sd(k as f64 / 20.0);
            assert!(now <= prev + 1e-12);
            prev = now;
        }
    }

    #[test]
    fn scene_validation_rejects_bad_schedules() {
        let p = Placement::identity();
        let shape = Shape::sphere(0.1).unwrap();
        let unordered = Scene::new(vec![Obstacle {
            name: "x".into(),
            shape: shape.clone(),
            motion: ObstacleMotion::Schedule(vec![(1.0, p), (1.0, p)]),
        }]);
        assert!(matches!(unordered, Err(SdfError::InvalidObstacle { .. })));
        let empty_sched = Scene::new(vec![Obstacle {
            name: "x".into(),
            shape: shape.clone(),
            motion: ObstacleMotion::Schedule(vec![]),
        }]);
        assert!(empty_sched.is_err());
        let unnamed = Scene::new(vec![Obstacle {
            name: "".into(),
            shape,
            motion: ObstacleMotion::Fixed(p),
        }]);
        assert!(unnamed.is_err());
    }
}
