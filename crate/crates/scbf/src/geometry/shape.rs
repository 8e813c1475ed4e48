//! Shape kinds and their support functions.

use nalgebra::Vector3;

use super::{GeometryError, Placement};

/// A convex body, dimensions in meters.
///
/// For distance queries each shape is viewed as a *core* set inflated by a
/// radius: spheres are inflated points, capsules inflated segments, boxes
/// and hulls their own vertex sets with zero inflation. GJK operates on
/// the cores; the radii are added back analytically.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Sphere {
        radius: f64,
    },
    Box {
        half_extents: Vector3<f64>,
    },
    Capsule {
        radius: f64,
        /// Half the segment length; the capsule axis is local z.
        half_length: f64,
    },
    Hull {
        points: Vec<Vector3<f64>>,
    },
}

impl Shape {
    /// Sphere of the given radius.
    pub fn sphere(radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(GeometryError::InvalidShape(format!(
                "sphere radius must be positive, got {radius}"
            )));
        }
        Ok(Shape::Sphere { radius })
    }

    /// Axis-aligned box (in its local frame) with the given half-extents.
    pub fn box_shape(half_extents: Vector3<f64>) -> Result<Self, GeometryError> {
        if !half_extents.iter().all(|&h| h > 0.0 && h.is_finite()) {
            return Err(GeometryError::InvalidShape(format!(
                "box half-extents must be positive, got {half_extents:?}"
            )));
        }
        Ok(Shape::Box { half_extents })
    }

    /// Capsule along local z with the given radius and segment half-length.
    pub fn capsule(radius: f64, half_length: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0 && radius.is_finite()) || !(half_length > 0.0 && half_length.is_finite())
        {
            return Err(GeometryError::InvalidShape(format!(
                "capsule needs positive radius and half-length, got r={radius}, h={half_length}"
            )));
        }
        Ok(Shape::Capsule {
            radius,
            half_length,
        })
    }

    /// Convex hull of a point cloud (the points themselves are stored; no
    /// facet enumeration is needed for support queries). Requires at least
    /// four affinely independent points so the hull has interior.
    pub fn hull(points: Vec<Vector3<f64>>) -> Result<Self, GeometryError> {
        if points.len() < 4 {
            return Err(GeometryError::InvalidShape(format!(
                "hull needs ≥ 4 points, got {}",
                points.len()
            )));
        }
        if !points.iter().all(|p| p.iter().all(|v| v.is_finite())) {
            return Err(GeometryError::InvalidShape("hull point not finite".into()));
        }
        if affine_rank(&points) < 3 {
            return Err(GeometryError::InvalidShape(
                "hull points are affinely dependent (flat or degenerate)".into(),
            ));
        }
        Ok(Shape::Hull { points })
    }

    /// Radius by which the core set is inflated to form the shape.
    #[inline]
    pub fn inflation_radius(&self) -> f64 {
        match self {
            Shape::Sphere { radius } | Shape::Capsule { radius, .. } => *radius,
            Shape::Box { .. } | Shape::Hull { .. } => 0.0,
        }
    }

    /// Support point of the *core* set under `placement` in direction
    /// `dir` (unit length not required for the argmax, only nonzero).
    pub fn core_support(&self, placement: &Placement, dir: &Vector3<f64>) -> Vector3<f64> {
        // Work in the local frame: argmax over the core of ⟨R·x + t, d⟩
        // = R·argmax ⟨x, Rᵀd⟩ + t.
        let local = placement.rotation.transpose() * dir;
        let local_support = match self {
            Shape::Sphere { .. } => Vector3::zeros(),
            Shape::Box { half_extents } => Vector3::new(
                half_extents.x.copysign(local.x),
                half_extents.y.copysign(local.y),
                half_extents.z.copysign(local.z),
            ),
            Shape::Capsule { half_length, .. } => {
                Vector3::new(0.0, 0.0, half_length.copysign(local.z))
            }
            Shape::Hull { points } => *points
                .iter()
                .max_by(|a, b| a.dot(&local).partial_cmp(&b.dot(&local)).unwrap())
                .expect("hull is non-empty by construction"),
        };
        placement.apply(&local_support)
    }

    /// A point guaranteed to lie inside the placed shape (used to seed
    /// penetration queries).
    pub fn interior_point(&self, placement: &Placement) -> Vector3<f64> {
        match self {
            Shape::Hull { points } => {
                let mean = points.iter().sum::<Vector3<f64>>() / points.len() as f64;
                placement.apply(&mean)
            }
            _ => placement.translation,
        }
    }
}

/// Rank of the affine span of a point set, with tolerance 1e-9 relative to
/// the cloud's extent (Gram–Schmidt on difference vectors).
fn affine_rank(points: &[Vector3<f64>]) -> usize {
    let origin = points[0];
    let scale = points
        .iter()
        .map(|p| (p - origin).norm())
        .fold(0.0_f64, f64::max)
        .max(1e-12);
    let mut basis: Vec<Vector3<f64>> = Vec::with_capacity(3);
    for p in &points[1..] {
        let mut v = p - origin;
        for b in &basis {
            v -= v.dot(b) * b;
        }
        if v.norm() > 1e-9 * scale {
            basis.push(v.normalize());
            if basis.len() == 3 {
                break;
            }
        }
    }
    basis.len()
}

// ───────────────────────────── Tests ─────────────────────────────
