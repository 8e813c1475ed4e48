//! Convex shapes and signed distance between placed bodies.
//!
//! Every body is a convex shape in a rigid [`Placement`]. Distance queries
//! decompose each shape into a *core* convex set plus an inflation radius
//! (sphere = inflated point, capsule = inflated segment, box and hull =
//! themselves with radius zero) and run GJK on the Minkowski difference of
//! the cores. While the cores stay separated, the signed distance is the
//! core distance minus the two radii — exact even for shallow penetration
//! of the inflated surfaces. Once the cores themselves overlap, EPA
//! recovers the core penetration depth and the same offset applies.
//!
//! Conventions: `normal` points from body B toward body A (the direction A
//! must translate to increase clearance) and the witness points satisfy
//! `witness_a − witness_b = signed_distance · normal` in every branch.

mod analytic;
mod epa;
mod gjk;
mod shape;

pub use shape::Shape;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::consts::TOUCH_EPS;

/// Errors from shape construction and distance queries.
#[derive(Debug, Error)]
pub enum GeometryError {
    /// A shape parameter violates its invariant (non-positive radius,
    /// degenerate hull, …).
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    /// A placement's rotation block is not a proper rotation.
    #[error("invalid placement: {0}")]
    InvalidPlacement(String),
    /// A direction argument was (numerically) zero.
    #[error("degenerate direction (norm {0:.3e})")]
    DegenerateDirection(f64),
}

/// Rigid transform placing a shape in the world: `x ↦ R·x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Placement {
    /// Identity placement at the origin.
    pub fn identity() -> Self {
        Placement {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Pure translation.
    pub fn from_translation(t: Vector3<f64>) -> Self {
        Placement {
            rotation: Matrix3::identity(),
            translation: t,
        }
    }

    /// Validates orthonormality (`‖RᵀR − I‖_max ≤ 1e-9`) and orientation
    /// (`det R = +1` within 1e-9).
    pub fn validate(&self) -> Result<(), GeometryError> {
        let gram = self.rotation.transpose() * self.rotation;
        let dev = (gram - Matrix3::identity()).abs().max();
        if dev > 1e-9 {
            return Err(GeometryError::InvalidPlacement(format!(
                "rotation not orthonormal (max deviation {dev:.3e})"
            )));
        }
        let det = self.rotation.determinant();
        if (det - 1.0).abs() > 1e-9 {
            return Err(GeometryError::InvalidPlacement(format!(
                "rotation must be proper (det = {det:.12})"
            )));
        }
        if !self.translation.iter().all(|v| v.is_finite()) {
            return Err(GeometryError::InvalidPlacement(
                "translation not finite".into(),
            ));
        }
        Ok(())
    }

    /// Composition `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Placement) -> Placement {
        Placement {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    /// Maps a local point to world coordinates.
    #[inline]
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }
}

/// Outcome of a signed-distance query between two placed bodies.
#[derive(Debug, Clone, Copy)]
pub struct DistanceResult {
    /// Separation distance (> 0), penetration depth negated (< 0), or
    /// exactly 0 inside the touching band.
    pub signed_distance: f64,
    /// Closest (or deepest) point on body A, world frame.
    pub witness_a: Vector3<f64>,
    /// Closest (or deepest) point on body B, world frame.
    pub witness_b: Vector3<f64>,
    /// Unit minimal-translation direction for A, pointing from B toward A.
    pub normal: Vector3<f64>,
    /// False when GJK/EPA hit their iteration caps and the result is the
    /// best bound found rather than a converged answer.
    pub converged: bool,
}

/// World-frame support point of a placed shape: the point maximizing the
/// dot product with `direction`.
pub fn support(
    shape: &Shape,
    placement: &Placement,
    direction: &Vector3<f64>,
) -> Result<Vector3<f64>, GeometryError> {
    let norm = direction.norm();
    if norm < 1e-12 {
        return Err(GeometryError::DegenerateDirection(norm));
    }
    let dir = direction / norm;
    let core = shape.core_support(placement, &dir);
    Ok(core + shape.inflation_radius() * dir)
}

/// Signed distance between two placed bodies, with witness points and the
/// minimal-translation normal.
///
/// Sphere/capsule pairs are resolved in closed form; every other pairing
/// runs GJK on the shape cores, falling back to EPA when the cores
/// overlap. Results with `|signed_distance| < 1e-9` are snapped to exactly
/// zero (touching contact) while keeping the last valid normal.
pub fn signed_distance(
    a: &Shape,
    pa: &Placement,
    b: &Shape,
    pb: &Placement,
) -> Result<DistanceResult, GeometryError> {
    let mut result = match (a, b) {
        (Shape::Sphere { .. } | Shape::Capsule { .. }, Shape::Sphere { .. } | Shape::Capsule { .. }) => {
            analytic::sphere_capsule_family(a, pa, b, pb)
        }
        _ => general_signed_distance(a, pa, b, pb),
    };
    if result.signed_distance.abs() < TOUCH_EPS {
        result.signed_distance = 0.0;
    }
    Ok(result)
}

/// GJK/EPA path shared by all non-analytic pairings.
fn general_signed_distance(
    a: &Shape,
    pa: &Placement,
    b: &Shape,
    pb: &Placement,
) -> DistanceResult {
    let inflation = a.inflation_radius() + b.inflation_radius();
    match gjk::core_distance(a, pa, b, pb) {
        gjk::CoreQuery::Separated {
            distance,
            core_a,
            core_b,
            converged,
        } => {
            let normal = (core_a - core_b) / distance;
            DistanceResult {
                signed_distance: distance - inflation,
                witness_a: core_a - a.inflation_radius() * normal,
                witness_b: core_b + b.inflation_radius() * normal,
                normal,
                converged,
            }
        }
        gjk::CoreQuery::Overlapping { simplex } => {
            let pen = epa::penetration(a, pa, b, pb, simplex);
            DistanceResult {
                signed_distance: -(pen.depth + inflation),
                witness_a: pen.core_a - a.inflation_radius() * pen.normal,
                witness_b: pen.core_b + b.inflation_radius() * pen.normal,
                normal: pen.normal,
                converged: pen.converged,
            }
        }
    }
}

// ───────────────────────────── Tests ─────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn vec3(rng: &mut impl Rng, scale: f64) -> Vector3<f64> {
        Vector3::new(
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
        )
    }

    fn random_rotation(rng: &mut impl Rng) -> Matrix3<f64> {
        // Random axis-angle, built from orthonormalized columns.
        let axis = loop {
            let v = vec3(rng, 1.0);
            if v.norm() > 1e-3 {
                break v.normalize();
            }
        };
        let angle = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
        nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle)
            .into_inner()
    }

    fn random_placement(rng: &mut impl Rng, spread: f64) -> Placement {
        Placement {
            rotation: random_rotation(rng),
            translation: vec3(rng, spread),
        }
    }

    fn random_hull(rng: &mut impl Rng, n: usize, scale: f64) -> Shape {
        loop {
            let pts: Vec<Vector3<f64>> = (0..n).map(|_| vec3(rng, scale)).collect();
            if let Ok(h) = Shape::hull(pts) {
                return h;
            }
        }
    }

    fn random_shape(rng: &mut impl Rng) -> Shape {
        match rng.gen_range(0..4) {
            0 => Shape::sphere(rng.gen_range(0.05..0.5)).unwrap(),
            1 => Shape::capsule(rng.gen_range(0.05..0.3), rng.gen_range(0.1..0.5)).unwrap(),
            2 => Shape::box_shape(Vector3::new(
                rng.gen_range(0.05..0.5),
                rng.gen_range(0.05..0.5),
                rng.gen_range(0.05..0.5),
            ))
            .unwrap(),
            _ => {
                let n = rng.gen_range(4..12);
                random_hull(rng, n, 0.4)
            }
        }
    }

    // ----- support function -----

    #[test]
    fn sphere_support_along_x() {
        let s = Shape::sphere(1.0).unwrap();
        let p = support(&s, &Placement::identity(), &Vector3::x()).unwrap();
        assert!((p - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn box_support_picks_corner() {
        let b = Shape::box_shape(Vector3::new(1.0, 1.0, 1.0)).unwrap();
        let d = Vector3::new(1.0, 1.0, 1.0).normalize();
        let p = support(&b, &Placement::identity(), &d).unwrap();
        assert!((p - Vector3::new(1.0, 1.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_direction_rejected() {
        let s = Shape::sphere(1.0).unwrap();
        assert!(matches!(
            support(&s, &Placement::identity(), &Vector3::zeros()),
            Err(GeometryError::DegenerateDirection(_))
        ));
    }

    #[test]
    fn hull_support_matches_vertex_scan() {
        // Oracle: exhaustive argmax over the transformed vertex set.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n_pts = rng.gen_range(4..20);
            let hull = random_hull(&mut rng, n_pts, 1.0);
            let placement = random_placement(&mut rng, 2.0);
            let dir = loop {
                let v = vec3(&mut rng, 1.0);
                if v.norm() > 1e-3 {
                    break v.normalize();
                }
            };
            let got = support(&hull, &placement, &dir).unwrap();
            let Shape::Hull { points } = &hull else {
                unreachable!()
            };
            let best = points
                .iter()
                .map(|p| placement.apply(p))
                .max_by(|a, b| a.dot(&dir).partial_cmp(&b.dot(&dir)).unwrap())
                .unwrap();
            assert!(
                (got.dot(&dir) - best.dot(&dir)).abs() < 1e-10,
                "support value mismatch"
            );
        }
    }

    // ----- analytic sphere cases -----

    #[test]
    fn separated_spheres() {
        let s = Shape::sphere(1.0).unwrap();
        let pa = Placement::identity();
        let pb = Placement::from_translation(Vector3::new(3.0, 0.0, 0.0));
        let r = signed_distance(&s, &pa, &s, &pb).unwrap();
        assert!((r.signed_distance - 1.0).abs() < 1e-12);
        assert!((r.normal - Vector3::new(-1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((r.witness_a - Vector3::new(1.0, 0.0, 0.0)).norm() < 1e-12);
        assert!((r.witness_b - Vector3::new(2.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn penetrating_spheres() {
        let s = Shape::sphere(1.0).unwrap();
        let pa = Placement::identity();
        let pb = Placement::from_translation(Vector3::new(1.0, 0.0, 0.0));
        let r = signed_distance(&s, &pa, &s, &pb).unwrap();
        assert!((r.signed_distance + 1.0).abs() < 1e-12);
        // witness_a − witness_b = sd·normal also in penetration
        let gap = r.witness_a - r.witness_b;
        assert!((gap - r.signed_distance * r.normal).norm() < 1e-9);
    }

    #[test]
    fn touching_band_snaps_to_zero() {
        let s = Shape::sphere(1.0).unwrap();
        let pa = Placement::identity();
        let pb = Placement::from_translation(Vector3::new(2.0 + 1e-10, 0.0, 0.0));
        let r = signed_distance(&s, &pa, &s, &pb).unwrap();
        assert_eq!(r.signed_distance, 0.0);
        assert!((r.normal.norm() - 1.0).abs() < 1e-9);
    }

    // ----- GJK against independent minimization oracle -----

    /// Pairwise Frank–Wolfe minimization of ‖x − y‖² over two vertex hulls:
    /// an independent distance oracle sharing no machinery with GJK.
    fn hull_distance_oracle(pa: &[Vector3<f64>], pb: &[Vector3<f64>]) -> f64 {
        // State: convex weights over each vertex set.
        let mut wa = vec![0.0; pa.len()];
        let mut wb = vec![0.0; pb.len()];
        wa[0] = 1.0;
        wb[0] = 1.0;
        let point = |w: &[f64], pts: &[Vector3<f64>]| -> Vector3<f64> {
            w.iter()
                .zip(pts)
                .map(|(&c, p)| c * p)
                .fold(Vector3::zeros(), |s, v| s + v)
        };
        for _ in 0..20_000 {
            let x = point(&wa, pa);
            let y = point(&wb, pb);
            let g = x - y; // ∇_x of ½‖x−y‖²  (and −∇_y)
            if g.norm() < 1e-14 {
                return 0.0;
            }
            // Frank–Wolfe vertices (toward minimization) and away vertices.
            let fw_a = (0..pa.len()).min_by(|&i, &j| {
                pa[i].dot(&g).partial_cmp(&pa[j].dot(&g)).unwrap()
            });
            let fw_b = (0..pb.len()).min_by(|&i, &j| {
                pb[i].dot(&-g).partial_cmp(&pb[j].dot(&-g)).unwrap()
            });
            let away_a = (0..pa.len())
                .filter(|&i| wa[i] > 0.0)
                .max_by(|&i, &j| pa[i].dot(&g).partial_cmp(&pa[j].dot(&g)).unwrap());
            let away_b = (0..pb.len())
                .filter(|&i| wb[i] > 0.0)
                .max_by(|&i, &j| pb[i].dot(&-g).partial_cmp(&pb[j].dot(&-g)).unwrap());
            let (fa, fb, aa, ab) = (
                fw_a.unwrap(),
                fw_b.unwrap(),
                away_a.unwrap(),
                away_b.unwrap(),
            );
            // Pairwise step: move weight from the away vertex to the FW
            // vertex on whichever body offers the steeper decrease.
            let gain_a = g.dot(&(pa[aa] - pa[fa]));
            let gain_b = (-g).dot(&(pb[ab] - pb[fb]));
            let (pts, w, from, to, d) = if gain_a >= gain_b {
                (pa, &mut wa, aa, fa, pa[fa] - pa[aa])
            } else {
                (pb, &mut wb, ab, fb, pb[fb] - pb[ab])
            };
            let _ = pts;
            // Exact line search for ½‖x − y + γ·(±d)‖²; sign folded into d.
            let diff = if gain_a >= gain_b { x - y } else { y - x };
            let denom = d.norm_squared();
            if denom < 1e-30 {
                break;
            }
            let gamma = (-diff.dot(&d) / denom).clamp(0.0, w[from]);
            if gamma <= 1e-18 {
                break;
            }
            w[from] -= gamma;
            w[to] += gamma;
        }
        (point(&wa, pa) - point(&wb, pb)).norm()
    }

    #[test]
    fn hull_pairs_match_frank_wolfe_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut checked = 0;
        while checked < 60 {
            let (na, nb) = (rng.gen_range(4..14), rng.gen_range(4..14));
            let a = random_hull(&mut rng, na, 0.5);
            let b = random_hull(&mut rng, nb, 0.5);
            let pa = random_placement(&mut rng, 0.8);
            let pb = random_placement(&mut rng, 0.8);
            let r = signed_distance(&a, &pa, &b, &pb).unwrap();
            if r.signed_distance <= 1e-3 {
                continue; // oracle covers the separated branch
            }
            let (Shape::Hull { points: qa }, Shape::Hull { points: qb }) = (&a, &b) else {
                unreachable!()
            };
            let va: Vec<_> = qa.iter().map(|p| pa.apply(p)).collect();
            let vb: Vec<_> = qb.iter().map(|p| pb.apply(p)).collect();
            let want = hull_distance_oracle(&va, &vb);
            assert!(
                (r.signed_distance - want).abs() < 1e-6,
                "GJK {} vs oracle {}",
                r.signed_distance,
                want
            );
            checked += 1;
        }
    }

    #[test]
    fn gjk_matches_analytic_on_capsule_pairs() {
        // Force the general path on shapes the analytic branch also covers
        // by wrapping capsule cores as hulls is impossible; instead compare
        // sphere-vs-box GJK against the exact point-box distance.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let radius = rng.gen_range(0.05..0.4);
            let sphere = Shape::sphere(radius).unwrap();
            let he = Vector3::new(
                rng.gen_range(0.1..0.6),
                rng.gen_range(0.1..0.6),
                rng.gen_range(0.1..0.6),
            );
            let bx = Shape::box_shape(he).unwrap();
            let center = vec3(&mut rng, 1.5);
            let pa = Placement::from_translation(center);
            let pb = Placement::identity();
            let r = signed_distance(&sphere, &pa, &bx, &pb).unwrap();
            // Exact: clamp the center into the box, measure, subtract radius.
            let clamped = Vector3::new(
                center.x.clamp(-he.x, he.x),
                center.y.clamp(-he.y, he.y),
                center.z.clamp(-he.z, he.z),
            );
            let outside = (center - clamped).norm();
            if outside > 1e-6 {
                let want = outside - radius;
                assert!(
                    (r.signed_distance - want).abs() < 1e-7,
                    "sphere-box {} vs exact {}",
                    r.signed_distance,
                    want
                );
            }
        }
    }

    // ----- sign correctness on constructed pairs -----

    #[test]
    fn sign_correct_on_constructed_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for case in 0..1000 {
            let a = random_shape(&mut rng);
            let b = random_shape(&mut rng);
            let pa = random_placement(&mut rng, 0.5);
            if case % 2 == 0 {
                // Separate by a slab of known width along a random axis:
                // max_B n·x + gap = min_A n·x guarantees disjoint bodies.
                let n = loop {
                    let v = vec3(&mut rng, 1.0);
                    if v.norm() > 1e-3 {
                        break v.normalize();
                    }
                };
                let gap = rng.gen_range(0.01..0.5);
                let top_a = support(&a, &pa, &(-n)).unwrap().dot(&n);
                let mut pb = random_placement(&mut rng, 0.5);
                let top_b = support(&b, &pb, &n).unwrap().dot(&n);
                pb.translation += (top_a - gap - top_b) * n;
                let r = signed_distance(&a, &pa, &b, &pb).unwrap();
                assert!(
                    r.signed_distance >= gap - 1e-7,
                    "slab-separated pair reported sd = {} < gap {}",
                    r.signed_distance,
                    gap
                );
            } else {
                // Put a boundary point of B inside A: guaranteed overlap.
                let interior = a.interior_point(&pa);
                let mut pb = random_placement(&mut rng, 0.5);
                let anchor = support(&b, &pb, &Vector3::x()).unwrap();
                pb.translation += interior - anchor;
                let r = signed_distance(&a, &pa, &b, &pb).unwrap();
                assert!(
                    r.signed_distance <= 1e-7,
                    "overlapping pair reported sd = {}",
                    r.signed_distance
                );
            }
        }
    }

    // ----- metric properties -----

    #[test]
    fn symmetry_and_translation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let a = random_shape(&mut rng);
            let b = random_shape(&mut rng);
            let pa = random_placement(&mut rng, 1.0);
            let pb = random_placement(&mut rng, 1.0);
            let fwd = signed_distance(&a, &pa, &b, &pb).unwrap();
            let rev = signed_distance(&b, &pb, &a, &pa).unwrap();
            assert!(
                (fwd.signed_distance - rev.signed_distance).abs() < 1e-9,
                "asymmetric: {} vs {}",
                fwd.signed_distance,
                rev.signed_distance
            );

            let shift = vec3(&mut rng, 3.0);
            let mut pa2 = pa;
            let mut pb2 = pb;
            pa2.translation += shift;
            pb2.translation += shift;
            let moved = signed_distance(&a, &pa2, &b, &pb2).unwrap();
            assert!(
                (fwd.signed_distance - moved.signed_distance).abs() < 1e-9,
                "not translation equivariant"
            );
        }
    }

    #[test]
    fn witnesses_and_normal_consistent_when_separated() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let mut checked = 0;
        while checked < 200 {
            let a = random_shape(&mut rng);
            let b = random_shape(&mut rng);
            let pa = random_placement(&mut rng, 1.2);
            let pb = random_placement(&mut rng, 1.2);
            let r = signed_distance(&a, &pa, &b, &pb).unwrap();
            if r.signed_distance <= 1e-6 {
                continue;
            }
            checked += 1;
            assert!(((r.witness_a - r.witness_b).norm() - r.signed_distance).abs() < 1e-7);
            assert!((r.normal.norm() - 1.0).abs() < 1e-9);
            let gap = r.witness_a - r.witness_b;
            assert!((gap - r.signed_distance * r.normal).norm() < 1e-6);
        }
    }

    #[test]
    fn lipschitz_in_translation() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let mut checked = 0;
        while checked < 200 {
            let a = random_shape(&mut rng);
            let b = random_shape(&mut rng);
            let pa = random_placement(&mut rng, 1.0);
            let pb = random_placement(&mut rng, 1.0);
            let base = signed_distance(&a, &pa, &b, &pb).unwrap();
            if base.signed_distance <= 1e-4 {
                continue;
            }
            checked += 1;
            let delta = vec3(&mut rng, 0.01);
            let mut pb2 = pb;
            pb2.translation += delta;
            let moved = signed_distance(&a, &pa, &b, &pb2).unwrap();
            assert!(
                (moved.signed_distance - base.signed_distance).abs() <= delta.norm() + 1e-7,
                "distance jumped more than the perturbation"
            );
        }
    }

    #[test]
    fn box_box_penetration_depth_known_case() {
        // Two unit cubes overlapping by 0.4 along x: penetration −0.4,
        // resolvable along ±x.
        let c = Shape::box_shape(Vector3::new(0.5, 0.5, 0.5)).unwrap();
        let pa = Placement::identity();
        let pb = Placement::from_translation(Vector3::new(0.6, 0.0, 0.0));
        let r = signed_distance(&c, &pa, &c, &pb).unwrap();
        assert!(
            (r.signed_distance + 0.4).abs() < 1e-7,
            "expected −0.4, got {}",
            r.signed_distance
        );
        assert!((r.normal.x.abs() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn placement_validation() {
        let mut p = Placement::identity();
        assert!(p.validate().is_ok());
        p.rotation[(0, 0)] = 1.5;
        assert!(p.validate().is_err());

        // Reflection (det −1) rejected even though orthonormal.
        let mut refl = Placement::identity();
        refl.rotation[(2, 2)] = -1.0;
        assert!(refl.validate().is_err());
    }
}
