//! Closed-form distance for sphere/capsule pairings.
//!
//! Both shapes are inflated points or segments, so the signed distance is
//! the point/segment–point/segment distance minus the radii — exact in
//! every configuration, including deep penetration, which makes these
//! paths the reference the general GJK/EPA branch is tested against.

use nalgebra::Vector3;

use super::shape::Shape;
use super::{DistanceResult, Placement};

/// Core of a sphere or capsule: a segment (spheres use a zero-length one).
struct SegmentCore {
    p0: Vector3<f64>,
    p1: Vector3<f64>,
    radius: f64,
}

fn segment_core(shape: &Shape, placement: &Placement) -> SegmentCore {
    match shape {
        Shape::Sphere { radius } => SegmentCore {
            p0: placement.translation,
            p1: placement.translation,
            radius: *radius,
        },
        Shape::Capsule {
            radius,
            half_length,
        } => {
            let axis = placement.rotation * Vector3::new(0.0, 0.0, *half_length);
            SegmentCore {
                p0: placement.translation - axis,
                p1: placement.translation + axis,
                radius: *radius,
            }
        }
        _ => unreachable!("analytic path only handles spheres and capsules"),
    }
}

/// Closest points between two segments (Ericson's clamped parametric
/// form, robust for degenerate and parallel segments).
fn closest_segment_segment(
    p1: Vector3<f64>,
    q1: Vector3<f64>,
    p2: Vector3<f64>,
    q2: Vector3<f64>,
) -> (Vector3<f64>, Vector3<f64>) {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);

    let (s, t);
    if a <= 1e-30 && e <= 1e-30 {
        (s, t) = (0.0, 0.0);
    } else if a <= 1e-30 {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= 1e-30 {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s_ = if denom > 1e-30 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0 // parallel: any s; refine t then re-clamp s
            };
            let mut t_ = (b * s_ + f) / e;
            if t_ < 0.0 {
                t_ = 0.0;
                s_ = (-c / a).clamp(0.0, 1.0);
            } else if t_ > 1.0 {
                t_ = 1.0;
                s_ = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t) = (s_, t_);
        }
    }
    (p1 + s * d1, p2 + t * d2)
}

/// Signed distance for pairs where both bodies are spheres or capsules.
pub(super) fn sphere_capsule_family(
    a: &Shape,
    pa: &Placement,
    b: &Shape,
    pb: &Placement,
) -> DistanceResult {
    let ca = segment_core(a, pa);
    let cb = segment_core(b, pb);
    let (na, nb) = closest_segment_segment(ca.p0, ca.p1, cb.p0, cb.p1);
    let axis = na - nb;
    let core_dist = axis.norm();

    // Coincident cores leave the normal underdetermined; any unit vector
    // yields a valid (deepest-point) witness pair.
    let normal = if core_dist > 1e-12 {
        axis / core_dist
    } else {
        Vector3::z()
    };
    let sd = core_dist - ca.radius - cb.radius;
    DistanceResult {
        signed_distance: sd,
        witness_a: na - ca.radius * normal,
        witness_b: nb + cb.radius * normal,
        normal,
        converged: true,
    }
}

// ───────────────────────────── Tests ─────────────────────────────
