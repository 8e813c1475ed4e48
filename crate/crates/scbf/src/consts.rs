//! Every hard-coded tolerance, iteration cap and sentinel in one place.
//!
//! Each constant is load-bearing for at least one documented contract; do
//! not tune them ad hoc. Tests assert against these names, so changing a
//! value here changes the advertised accuracy of the whole crate.

/// Relative reconstruction accuracy of the symmetric eigensolver:
/// `‖V Λ Vᵀ − A‖_F ≤ EIGEN_RECONSTRUCTION_TOL · ‖A‖_F`.
pub const EIGEN_RECONSTRUCTION_TOL: f64 = 1e-10;

/// Absolute residual the inverse regularized incomplete beta must reach:
/// `|I_x(a, b) − p| ≤ BETA_INV_TOL`.
pub const BETA_INV_TOL: f64 = 1e-12;

/// Duality-gap termination for GJK distance queries, in meters.
pub const GJK_GAP_TOL: f64 = 1e-9;

/// Iteration cap for a single GJK query.
pub const GJK_MAX_ITERATIONS: usize = 128;

/// Face-distance convergence tolerance for EPA penetration depth, meters.
pub const EPA_FACE_TOL: f64 = 1e-9;

/// Cap on the number of polytope faces EPA may allocate before giving up
/// and reporting its best bound.
pub const EPA_MAX_FACES: usize = 255;

/// Band around zero inside which a contact is reported as exactly touching:
/// signed distances with `|sd| < TOUCH_EPS` collapse to `0.0`.
pub const TOUCH_EPS: f64 = 1e-9;

/// Signed-distance sentinel standing in for "+infinity" (no pair to
/// measure), in meters.
pub const SD_SENTINEL: f64 = 1e9;

/// A configuration is treated as colliding when the overall signed distance
/// drops below `-COLLISION_EPS` (meters); the band absorbs query noise.
pub const COLLISION_EPS: f64 = 1e-6;

/// KKT residual (primal feasibility, dual feasibility, complementarity —
/// worst of the three) below which the SDP solver reports `Optimal`.
pub const SDP_KKT_TOL: f64 = 1e-6;

/// Eigenvalue floor for "numerically PSD" verdicts on slack blocks at an
/// SDP optimum.
pub const SDP_PSD_TOL: f64 = -1e-7;

/// Iteration cap for one interior-point solve.
pub const SDP_MAX_ITERATIONS: usize = 120;

/// Definiteness margin of the synthesized barrier: the curvature matrix is
/// constrained to `H ⪯ −PSD_MARGIN·I` and the center value to
/// `d ≥ PSD_MARGIN`.
pub const PSD_MARGIN: f64 = 1e-6;

/// A constraint row is flagged active when its slack at the optimum is
/// within this tolerance of zero (scaled by `1 + |offset|`).
pub const ACTIVE_CONSTRAINT_TOL: f64 = 1e-7;

/// Leave-one-out re-solves count a scenario as a support constraint when
/// the decision vector moves by more than this (Euclidean norm).
pub const SUPPORT_DECISION_TOL: f64 = 1e-7;

/// Safety filter: the barrier-rate constraint must hold up to this slack at
/// every accepted step (`g·u* + λ·b ≥ −FILTER_CONSTRAINT_SLACK`).
pub const FILTER_CONSTRAINT_SLACK: f64 = 1e-8;

/// Consecutive infeasible synthesis/filter steps the simulator tolerates
/// before declaring the run stuck.
pub const INFEASIBLE_STEP_BUDGET: usize = 50;

/// Default control period in seconds.
pub const DEFAULT_DT: f64 = 0.01;

/// Default class-K gain of the synthesis invariance constraint (1/s).
pub const DEFAULT_ALPHA: f64 = 1.0;

/// Default barrier-rate gain of the safety filter (1/s). The discrete
/// decrease contract `b(x_{k+1}) ≥ (1 − λ·dt)·b(x_k)` lets one step cover
/// only a `√(λ·dt)` fraction of the certified ellipsoid, so the default is
/// sized for `λ·dt = 0.5` at [`DEFAULT_DT`] — near full speed in open
/// space, braking only where the certified set actually shrinks.
pub const DEFAULT_LAMBDA: f64 = 50.0;

/// Default risk level ε used to size sample batches when the caller does
/// not pass an explicit batch size.
pub const DEFAULT_EPS: f64 = 0.1;

/// Default confidence parameter β for the risk bounds.
pub const DEFAULT_BETA: f64 = 0.05;

/// Residual (in log-magnitude-scaled units) to which the risk-polynomial
/// roots are refined.
pub const RISK_ROOT_RESIDUAL: f64 = 1e-9;
