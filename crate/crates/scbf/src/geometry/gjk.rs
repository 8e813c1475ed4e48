//! GJK distance between shape cores, with witness-point tracking.
//!
//! Operates on the configuration-space obstacle (CSO) `core(A) ⊖ core(B)`:
//! every simplex vertex remembers which support points of A and B produced
//! it, so the barycentric coordinates of the closest simplex point yield
//! world-frame witnesses directly.

use nalgebra::Vector3;

use super::shape::Shape;
use super::Placement;
use crate::consts::{GJK_GAP_TOL, GJK_MAX_ITERATIONS};

/// One CSO vertex with its generating support points.
#[derive(Debug, Clone, Copy)]
pub(super) struct SupportPoint {
    /// `a − b`, the CSO point.
    pub w: Vector3<f64>,
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
}

/// Outcome of the core-distance query.
pub(super) enum CoreQuery {
    Separated {
        distance: f64,
        core_a: Vector3<f64>,
        core_b: Vector3<f64>,
        converged: bool,
    },
    /// The cores intersect; the terminal simplex (1–4 CSO vertices whose
    /// hull contains the origin to tolerance) seeds EPA.
    Overlapping { simplex: Vec<SupportPoint> },
}

/// CSO support in direction `d`: `sup_A(d) − sup_B(−d)`.
fn cso_support(
    a: &Shape,
    pa: &Placement,
    b: &Shape,
    pb: &Placement,
    d: &Vector3<f64>,
) -> SupportPoint {
    let sa = a.core_support(pa, d);
    let sb = b.core_support(pb, &-d);
    SupportPoint {
        w: sa - sb,
        a: sa,
        b: sb,
    }
}

/// Distance between the placed cores of `a` and `b`.
pub(super) fn core_distance(a: &Shape, pa: &Placement, b: &Shape, pb: &Placement) -> CoreQuery {
    // Seed along the center line (or x if coincident).
    let mut dir = pa.translation - pb.translation;
    if dir.norm_squared() < 1e-24 {
        dir = Vector3::x();
    }
    let mut simplex = vec![cso_support(a, pa, b, pb, &dir)];

    let mut converged = false;
    for _ in 0..GJK_MAX_ITERATIONS {
        let (v, lambdas) = closest_to_origin(&simplex);
        let dist = v.norm();

        if dist < 1e-12 {
            return CoreQuery::Overlapping { simplex };
        }

        // Keep only the vertices supporting the closest point.
        reduce(&mut simplex, &lambdas);

        let w = cso_support(a, pa, b, pb, &(-v));
        // Support-plane lower bound along −v̂: distance ≥ v̂·w.
        let lower = v.dot(&w.w) / dist;
        if dist - lower <= GJK_GAP_TOL {
            converged = true;
            break;
        }
        // No measurable progress (repeated vertex): accept current bound.
        if simplex.iter().any(|s| (s.w - w.w).norm() < 1e-14) {
            converged = true;
            break;
        }
        simplex.push(w);
        if simplex.len() == 4 {
            // A full tetrahedron: check enclosure before iterating.
            let (v4, l4) = closest_to_origin(&simplex);
            if v4.norm() < 1e-12 {
                return CoreQuery::Overlapping { simplex };
            }
            let _ = l4;
        }
    }

    let (v, lambdas) = closest_to_origin(&simplex);
    if v.norm() < 1e-12 {
        return CoreQuery::Overlapping { simplex };
    }
    let mut core_a = Vector3::zeros();
    let mut core_b = Vector3::zeros();
    for (s, &l) in simplex.iter().zip(lambdas.iter()) {
        core_a += l * s.a;
        core_b += l * s.b;
    }
    CoreQuery::Separated {
        distance: v.norm(),
        core_a,
        core_b,
        converged,
    }
}

/// Drops simplex vertices whose barycentric weight is zero.
fn reduce(simplex: &mut Vec<SupportPoint>, lambdas: &[f64]) {
    let mut keep = Vec::with_capacity(simplex.len());
    for (s, &l) in simplex.iter().zip(lambdas.iter()) {
        if l > 0.0 {
            keep.push(*s);
        }
    }
    if keep.is_empty() {
        keep.push(simplex[0]);
    }
    *simplex = keep;
}

/// Closest point of `conv(simplex)` to the origin with barycentric
/// weights aligned to the input order (zeros mark non-supporting
/// vertices).
fn closest_to_origin(simplex: &[SupportPoint]) -> (Vector3<f64>, Vec<f64>) {
    match simplex.len() {
        1 => (simplex[0].w, vec![1.0]),
        2 => {
            let (p, l) = closest_on_segment(simplex[0].w, simplex[1].w);
            (p, l.to_vec())
        }
        3 => {
            let (p, l) = closest_on_triangle(simplex[0].w, simplex[1].w, simplex[2].w);
            (p, l.to_vec())
        }
        4 => closest_on_tetrahedron(simplex),
        n => unreachable!("simplex of size {n}"),
    }
}

/// Closest point to the origin on segment `ab` with barycentrics `(λa, λb)`.
fn closest_on_segment(a: Vector3<f64>, b: Vector3<f64>) -> (Vector3<f64>, [f64; 2]) {
    let ab = b - a;
    let denom = ab.norm_squared();
    if denom < 1e-30 {
        return (a, [1.0, 0.0]);
    }
    let t = (-a.dot(&ab) / denom).clamp(0.0, 1.0);
    (a + t * ab, [1.0 - t, t])
}

/// Closest point to the origin on triangle `abc` with barycentrics; the
/// Voronoi-region case analysis of the standard real-time collision
/// formulation, specialized to query point 0.
fn closest_on_triangle(
    a: Vector3<f64>,
    b: Vector3<f64>,
    c: Vector3<f64>,
) -> (Vector3<f64>, [f64; 3]) {
    let ab = b - a;
    let ac = c - a;
    let ap = -a;

    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (a, [1.0, 0.0, 0.0]);
    }

    let bp = -b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (b, [0.0, 1.0, 0.0]);
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let t = d1 / (d1 - d3);
        return (a + t * ab, [1.0 - t, t, 0.0]);
    }

    let cp = -c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (c, [0.0, 0.0, 1.0]);
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let t = d2 / (d2 - d6);
        return (a + t * ac, [1.0 - t, 0.0, t]);
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + t * (c - b), [0.0, 1.0 - t, t]);
    }

    // Interior: barycentric from the signed sub-areas.
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + v * ab + w * ac, [1.0 - v - w, v, w])
}

/// Closest point on a tetrahedron: the minimum over its faces, or the
/// origin itself when enclosed.
fn closest_on_tetrahedron(s: &[SupportPoint]) -> (Vector3<f64>, Vec<f64>) {
    let (a, b, c, d) = (s[0].w, s[1].w, s[2].w, s[3].w);

    // A collapsed tetrahedron cannot enclose anything; fall through to the
    // face minimum in that case instead of trusting sign tests on noise.
    let scale = [b - a, c - a, d - a]
        .iter()
        .map(|v| v.norm())
        .fold(1e-12_f64, f64::max);
    let volume = (b - a).cross(&(c - a)).dot(&(d - a)).abs();

    // Signed-volume orientation test for each face against the apex.
    let inside = |p0: Vector3<f64>, p1: Vector3<f64>, p2: Vector3<f64>, apex: Vector3<f64>| {
        let n = (p1 - p0).cross(&(p2 - p0));
        let sign_apex = n.dot(&(apex - p0));
        let sign_origin = n.dot(&-p0);
        // Origin on the same side as the apex (or on the plane).
        sign_apex * sign_origin >= 0.0
    };

    if volume > 1e-12 * scale.powi(3)
        && inside(a, b, c, d)
        && inside(a, b, d, c)
        && inside(a, c, d, b)
        && inside(b, c, d, a)
    {
        // Enclosed: weights are immaterial beyond signalling enclosure.
        return (Vector3::zeros(), vec![0.25; 4]);
    }

    let faces: [([usize; 3], (Vector3<f64>, Vector3<f64>, Vector3<f64>)); 4] = [
        ([0, 1, 2], (a, b, c)),
        ([0, 1, 3], (a, b, d)),
        ([0, 2, 3], (a, c, d)),
        ([1, 2, 3], (b, c, d)),
    ];
    let mut best: Option<(f64, Vector3<f64>, Vec<f64>)> = None;
    for (idx, (p0, p1, p2)) in faces {
        let (p, l) = closest_on_triangle(p0, p1, p2);
        let d2 = p.norm_squared();
        if best.as_ref().is_none_or(|(bd, _, _)| d2 < *bd) {
            let mut lam = vec![0.0; 4];
            for (j, &i) in idx.iter().enumerate() {
                lam[i] = l[j];
            }
            best = Some((d2, p, lam));
        }
    }
    let (_, p, lam) = best.expect("tetrahedron has faces");
    (p, lam)
}

// ───────────────────────────── Tests ─────────────────────────────
