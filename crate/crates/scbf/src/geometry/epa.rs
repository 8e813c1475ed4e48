//! EPA penetration depth for overlapping shape cores.
//!
//! Expands a polytope inside the CSO `core(A) ⊖ core(B)` outward from the
//! GJK terminal simplex until the face nearest the origin stops moving;
//! that face's plane distance is the penetration depth and its normal the
//! minimal-translation direction.

use nalgebra::Vector3;

use super::gjk::SupportPoint;
use super::shape::Shape;
use super::Placement;
use crate::consts::{EPA_FACE_TOL, EPA_MAX_FACES};

/// Core penetration: depth ≥ 0 along `normal` (pointing from B toward A),
/// with the deepest core points of each body.
pub(super) struct Penetration {
    pub depth: f64,
    pub normal: Vector3<f64>,
    pub core_a: Vector3<f64>,
    pub core_b: Vector3<f64>,
    pub converged: bool,
}

struct Face {
    verts: [usize; 3],
    /// Outward unit normal (away from the polytope interior).
    normal: Vector3<f64>,
    /// Distance of the face plane from the origin along `normal`.
    distance: f64,
    alive: bool,
}

/// Penetration of overlapping cores seeded by GJK's terminal simplex.
pub(super) fn penetration(
    a: &Shape,
    pa: &Placement,
    b: &Shape,
    pb: &Placement,
    seed: Vec<SupportPoint>,
) -> Penetration {
    let support = |d: &Vector3<f64>| -> SupportPoint {
        let sa = a.core_support(pa, d);
        let sb = b.core_support(pb, &-d);
        SupportPoint {
            w: sa - sb,
            a: sa,
            b: sb,
        }
    };

    let mut verts = seed;
    if !complete_tetrahedron(&mut verts, &support) {
        // The CSO is (numerically) flat: cores touch without volume
        // overlap. Depth 0 along the best separating axis available.
        let n = flat_normal(&verts);
        return Penetration {
            depth: 0.0,
            normal: -n,
            core_a: verts[0].a,
            core_b: verts[0].b,
            converged: true,
        };
    }

    // Interior reference for orienting face normals.
    let interior = (verts[0].w + verts[1].w + verts[2].w + verts[3].w) / 4.0;
    let mut faces: Vec<Face> = Vec::with_capacity(EPA_MAX_FACES);
    for idx in [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]] {
        if let Some(f) = make_face(&verts, idx, &interior) {
            faces.push(f);
        }
    }
    if faces.is_empty() {
        let n = flat_normal(&verts);
        return Penetration {
            depth: 0.0,
            normal: -n,
            core_a: verts[0].a,
            core_b: verts[0].b,
            converged: true,
        };
    }

    let mut converged = false;
    while faces.len() < EPA_MAX_FACES {
        let Some(best) = faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.alive)
            .min_by(|x, y| x.1.distance.partial_cmp(&y.1.distance).unwrap())
            .map(|(i, _)| i)
        else {
            break;
        };
        let (n, d) = (faces[best].normal, faces[best].distance);
        let w = support(&n);
        let growth = n.dot(&w.w) - d;
        if growth < EPA_FACE_TOL {
            converged = true;
            break;
        }

        // Remove every face visible from w and collect the horizon.
        let wi = verts.len();
        verts.push(w);
        let mut horizon: Vec<[usize; 2]> = Vec::new();
        for f in faces.iter_mut().filter(|f| f.alive) {
            if f.normal.dot(&(w.w - verts[f.verts[0]].w)) > 0.0 {
                f.alive = false;
                for e in [[f.verts[0], f.verts[1]], [f.verts[1], f.verts[2]], [f.verts[2], f.verts[0]]] {
                    // An edge shared by two removed faces cancels out.
                    if let Some(pos) = horizon.iter().position(|h| h[0] == e[1] && h[1] == e[0]) {
                        horizon.swap_remove(pos);
                    } else {
                        horizon.push(e);
                    }
                }
            }
        }
        if horizon.is_empty() {
            // w did not actually extend the polytope; accept current best.
            converged = true;
            break;
        }
        for e in horizon {
            if let Some(f) = make_face(&verts, [e[0], e[1], wi], &interior) {
                faces.push(f);
            }
        }
    }

    // Extract the witness from the best surviving face.
    let best = faces
        .iter()
        .filter(|f| f.alive)
        .min_by(|x, y| x.distance.partial_cmp(&y.distance).unwrap())
        .expect("EPA retains at least one face");
    let [i, j, k] = best.verts;
    let proj = best.distance * best.normal;
    let lam = barycentric_on_plane(proj, verts[i].w, verts[j].w, verts[k].w);
    let core_a = lam[0] * verts[i].a + lam[1] * verts[j].a + lam[2] * verts[k].a;
    let core_b = lam[0] * verts[i].b + lam[1] * verts[j].b + lam[2] * verts[k].b;
    Penetration {
        depth: best.distance,
        // Outward CSO normal points A-away-from-B; the B→A sense is its
        // negation (witness_a sits behind witness_b along the normal).
        normal: -best.normal,
        core_a,
        core_b,
        converged,
    }
}

/// Builds a face with outward orientation; `None` for degenerate slivers.
/// The vertex order is kept consistent with the outward normal (counter-
/// clockwise seen from outside) so horizon edges of adjacent faces appear
/// reversed and cancel correctly.
fn make_face(verts: &[SupportPoint], idx: [usize; 3], interior: &Vector3<f64>) -> Option<Face> {
    let (p0, p1, p2) = (verts[idx[0]].w, verts[idx[1]].w, verts[idx[2]].w);
    let mut n = (p1 - p0).cross(&(p2 - p0));
    let len = n.norm();
    let scale = (p1 - p0).norm().max((p2 - p0).norm()).max(1e-12);
    if len < 1e-12 * scale * scale {
        return None;
    }
    n /= len;
    let mut ordered = idx;
    if n.dot(&(p0 - interior)) < 0.0 {
        n = -n;
        ordered.swap(1, 2);
    }
    Some(Face {
        verts: ordered,
        normal: n,
        distance: n.dot(&p0).max(0.0),
        alive: true,
    })
}

/// Grows a 1–3 vertex seed into a tetrahedron with nonzero volume by
/// probing supports; `false` if the CSO is numerically flat.
fn complete_tetrahedron(
    verts: &mut Vec<SupportPoint>,
    support: &impl Fn(&Vector3<f64>) -> SupportPoint,
) -> bool {
    const AXES: [Vector3<f64>; 6] = [
        Vector3::new(1.0, 0.0, 0.0),
        Vector3::new(-1.0, 0.0, 0.0),
        Vector3::new(0.0, 1.0, 0.0),
        Vector3::new(0.0, -1.0, 0.0),
        Vector3::new(0.0, 0.0, 1.0),
        Vector3::new(0.0, 0.0, -1.0),
    ];

    // Grow dimension greedily: point → segment → triangle → tetrahedron.
    if verts.len() == 1 {
        for d in &AXES {
            let w = support(d);
            if (w.w - verts[0].w).norm() > 1e-10 {
                verts.push(w);
                break;
            }
        }
        if verts.len() == 1 {
            return false;
        }
    }
    if verts.len() == 2 {
        let axis = (verts[1].w - verts[0].w).normalize();
        // Two directions orthogonal to the segment.
        let seed = if axis.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let u = axis.cross(&seed).normalize();
        let v = axis.cross(&u);
        for d in [u, -u, v, -v] {
            let w = support(&d);
            let area = (verts[1].w - verts[0].w).cross(&(w.w - verts[0].w)).norm();
            if area > 1e-10 {
                verts.push(w);
                break;
            }
        }
        if verts.len() == 2 {
            return false;
        }
    }
    if verts.len() == 3 {
        let n = (verts[1].w - verts[0].w)
            .cross(&(verts[2].w - verts[0].w))
            .normalize();
        for d in [n, -n] {
            let w = support(&d);
            let vol = (verts[1].w - verts[0].w)
                .cross(&(verts[2].w - verts[0].w))
                .dot(&(w.w - verts[0].w))
                .abs();
            if vol > 1e-12 {
                verts.push(w);
                break;
            }
        }
        if verts.len() == 3 {
            return false;
        }
    }
    true
}

/// Barycentric coordinates of `p` (lying on the triangle's plane) with
/// respect to `abc`, clamped to the simplex and renormalized so slightly
/// out-of-face projections stay usable.
fn barycentric_on_plane(
    p: Vector3<f64>,
    a: Vector3<f64>,
    b: Vector3<f64>,
    c: Vector3<f64>,
) -> [f64; 3] {
    let v0 = b - a;
    let v1 = c - a;
    let v2 = p - a;
    let d00 = v0.dot(&v0);
    let d01 = v0.dot(&v1);
    let d11 = v1.dot(&v1);
    let d20 = v2.dot(&v0);
    let d21 = v2.dot(&v1);
    let denom = d00 * d11 - d01 * d01;
    if denom.abs() < 1e-30 {
        return [1.0, 0.0, 0.0];
    }
    let v = (d11 * d20 - d01 * d21) / denom;
    let w = (d00 * d21 - d01 * d20) / denom;
    let u = 1.0 - v - w;
    let cl = [u.max(0.0), v.max(0.0), w.max(0.0)];
    let s = cl[0] + cl[1] + cl[2];
    [cl[0] / s, cl[1] / s, cl[2] / s]
}

/// Best-effort outward direction for a flat CSO (touching cores).
fn flat_normal(verts: &[SupportPoint]) -> Vector3<f64> {
    match verts.len() {
        1 => {
            let n = verts[0].w;
            if n.norm() > 1e-12 {
                n.normalize()
            } else {
                Vector3::z()
            }
        }
        2 => {
            let axis = verts[1].w - verts[0].w;
            let seed = if axis.x.abs() < 0.9 * axis.norm() {
                Vector3::x()
            } else {
                Vector3::y()
            };
            axis.cross(&seed).normalize()
        }
        _ => {
            let n = (verts[1].w - verts[0].w).cross(&(verts[2].w - verts[0].w));
            if n.norm() > 1e-12 {
                n.normalize()
            } else {
                Vector3::z()
            }
        }
    }
}

// ───────────────────────────── Tests ─────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deep_box_overlap_reports_axis_depth() {
        // Unit cubes with centers 0.3 apart along y: core penetration 0.7.
        let c = Shape::box_shape(Vector3::new(0.5, 0.5, 0.5)).unwrap();
        let pa = Placement::identity();
        let pb = Placement::from_translation(Vector3::new(0.0, 0.3, 0.0));
        let super::super::gjk::CoreQuery::Overlapping { simplex } =
            super::super::gjk::core_distance(&c, &pa, &c, &pb)
        else {
            panic!("cores must overlap");
        };
        let pen = penetration(&c, &pa, &c, &pb, simplex);
        assert!(pen.converged);
        assert!((pen.depth - 0.7).abs() < 1e-7, "depth {}", pen.depth);
        // Minimal translation along −y for A (away from B).
        assert!(
            (pen.normal - Vector3::new(0.0, -1.0, 0.0)).norm() < 1e-7,
            "normal {:?}",
            pen.normal
        );
    }

    #[test]
    fn witness_points_track_depth() {
        let c = Shape::box_shape(Vector3::new(0.5, 0.5, 0.5)).unwrap();
        let pa = Placement::identity();
        let pb = Placement::from_translation(Vector3::new(0.2, 0.1, 0.05));
        let super::super::gjk::CoreQuery::Overlapping { simplex } =
            super::super::gjk::core_distance(&c, &pa, &c, &pb)
        else {
            panic!("cores must overlap");
        };
        let pen = penetration(&c, &pa, &c, &pb, simplex);
        // The deepest points realize the depth along the normal:
        // core_a − core_b = −depth·normal.
        let gap = pen.core_a - pen.core_b;
        assert!(
            (gap + pen.depth * pen.normal).norm() < 1e-6,
            "witnesses do not realize the depth: gap {gap:?} depth {} normal {:?}",
            pen.depth,
            pen.normal
        );
    }
}
