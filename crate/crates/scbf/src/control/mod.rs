//! Waypoint tracking, the barrier-rate safety filter, and the fixed-step
//! simulator with its on-disk formats.
//!
//! The closed loop per control period: synthesize a fresh barrier
//! certificate at the measured state ([`crate::cbfsyn::synthesize`]),
//! compute a proportional tracking input toward the active waypoint
//! ([`desired_input`]), project it onto the barrier-rate halfspace
//! ([`filter_input`]), shorten it so the quadratic barrier actually
//! decreases no faster than the contracted rate, and integrate. The
//! simulator in [`sim`] glues these together and logs one record per step;
//! [`files`] defines the JSON robot / scene / plan formats and the trace
//! CSV schema.
//!
//! Two deliberate asymmetries are worth knowing about:
//!
//! * The filter constraint is the *linearized* barrier rate
//!   `∇b(x)ᵀu + λ·b(x) ≥ 0`. At the synthesis center the gradient
//!   vanishes, so the halfspace is vacuous there and the projection alone
//!   cannot bound the quadratic term `dt²·uᵀHu` picked up over a full
//!   step. The simulator therefore rescales the filtered input by the
//!   largest factor that keeps `b(x + dt·u) ≥ (1 − λ·dt)·b(x)` exactly —
//!   a closed-form root of a concave quadratic, never a solve.
//! * An infeasible filter (or a state with no certified set at all) is not
//!   an error: the step executes `u = 0`, the sample budget is escalated,
//!   and only a long run of such steps aborts the simulation.

mod files;
mod sim;

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cbfsyn::{evaluate_cbf, CbfError, QuadraticCbf};
use crate::geometry::GeometryError;
use crate::robot::{JointConfig, RobotError};
use crate::scenario::ScenarioError;
use crate::sdfield::SdfError;

pub use files::{
    load_certificate, load_plan, load_robot, load_scene, parse_plan, parse_robot, parse_scene,
    save_certificate, CertificateFile, FORMAT_VERSION,
};
pub use sim::{
    run_simulation, simulate, write_trace, RunArtifacts, RunOutcome, RunSummary, SimConfig,
    StepRecord,
};

/// Errors from plan handling, filtering, file ingestion, and simulation.
///
/// Per-step feasibility failures are *not* errors — they surface as
/// [`QpStatus::Infeasible`] records and, in the extreme, as a
/// [`RunOutcome::Stuck`] verdict.
#[derive(Debug, Error)]
pub enum ControlError {
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// Malformed input file; `detail` carries serde's line/column or the
    /// offending field.
    #[error("{path}: {detail}")]
    Parse { path: String, detail: String },
    #[error(transparent)]
    Robot(#[from] RobotError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Sdf(#[from] SdfError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Cbf(#[from] CbfError),
}

/// An ordered list of joint-space waypoints plus the tracking law's knobs.
///
/// `gain` is the proportional constant (1/s). A waypoint is considered
/// reached within `switch_radius` (radians). The anti-stuck switch skips a
/// waypoint when the distance to it has improved by less than `stall_eps`
/// over the last `stall_window` control steps — without it the tracker can
/// push forever against an obstacle the safety filter will not let it
/// cross.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaypointPlan {
    pub waypoints: Vec<JointConfig>,
    pub gain: f64,
    pub switch_radius: f64,
    pub stall_window: usize,
    pub stall_eps: f64,
}

impl WaypointPlan {
    pub fn new(
        waypoints: Vec<JointConfig>,
        gain: f64,
        switch_radius: f64,
        stall_window: usize,
        stall_eps: f64,
    ) -> Result<Self, ControlError> {
        if waypoints.is_empty() {
            return Err(ControlError::Invalid(
                "a plan needs at least one waypoint".into(),
            ));
        }
        let n = waypoints[0].len();
        if n == 0 {
            return Err(ControlError::Invalid("zero-dimensional waypoint".into()));
        }
        for (i, w) in waypoints.iter().enumerate() {
            if w.len() != n {
                return Err(ControlError::Invalid(format!(
                    "waypoint {i} has {} joints, waypoint 0 has {n}",
                    w.len()
                )));
            }
            if w.q.iter().any(|v| !v.is_finite()) {
                return Err(ControlError::Invalid(format!(
                    "waypoint {i} has a non-finite coordinate"
                )));
            }
        }
        if !(gain > 0.0 && gain.is_finite()) {
            return Err(ControlError::Invalid(format!(
                "gain must be > 0, got {gain}"
            )));
        }
        if !(switch_radius > 0.0 && switch_radius.is_finite()) {
            return Err(ControlError::Invalid(format!(
                "switch radius must be > 0, got {switch_radius}"
            )));
        }
        if stall_window == 0 {
            return Err(ControlError::Invalid("stall window must be ≥ 1".into()));
        }
        if !(stall_eps > 0.0 && stall_eps.is_finite()) {
            return Err(ControlError::Invalid(format!(
                "stall epsilon must be > 0, got {stall_eps}"
            )));
        }
        Ok(WaypointPlan {
            waypoints,
            gain,
            switch_radius,
            stall_window,
            stall_eps,
        })
    }

    /// Joint-space dimension of the waypoints.
    pub fn n(&self) -> usize {
        self.waypoints[0].len()
    }
}

/// Mutable tracking state: which waypoint is active and the recent history
/// of distances to it (for stall detection). One instance per run.
#[derive(Debug, Clone, Default)]
pub struct TrackerState {
    active: usize,
    window: VecDeque<f64>,
    reached_goal: bool,
}

impl TrackerState {
    pub fn new() -> Self {
        TrackerState::default()
    }

    /// Index of the waypoint currently being tracked.
    pub fn active_waypoint(&self) -> usize {
        self.active
    }

    /// Whether the last waypoint has been reached within the switch radius.
    pub fn reached_goal(&self) -> bool {
        self.reached_goal
    }
}

/// Proportional tracking input toward the active waypoint, clamped to the
/// symmetric speed box `|u_i| ≤ bounds[i]`.
///
/// The returned input always targets the waypoint that was active on
/// entry; the switching bookkeeping (arrival within `switch_radius`,
/// or less than `stall_eps` of progress over the last `stall_window`
/// calls) takes effect on the *next* call. At the last waypoint, arrival
/// sets [`TrackerState::reached_goal`] instead of advancing, and the stall
/// switch has nowhere to go and does nothing.
pub fn desired_input(
    plan: &WaypointPlan,
    state: &mut TrackerState,
    x: &JointConfig,
    bounds: &[f64],
) -> Result<Vec<f64>, ControlError> {
    if x.len() != plan.n() {
        return Err(ControlError::Invalid(format!(
            "state has {} joints, plan has {}",
            x.len(),
            plan.n()
        )));
    }
    if bounds.len() != plan.n() || bounds.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
        return Err(ControlError::Invalid(
            "speed bounds must be positive, finite, and match the plan dimension".into(),
        ));
    }

    let last = plan.waypoints.len() - 1;
    let w = &plan.waypoints[state.active];
    let d = x.distance(w);

    let u = w
        .q
        .iter()
        .zip(x.q.iter())
        .zip(bounds.iter())
        .map(|((wi, xi), &bi)| (plan.gain * (wi - xi)).clamp(-bi, bi))
        .collect();

    let mut advanced = false;
    if d <= plan.switch_radius {
        if state.active == last {
            state.reached_goal = true;
        } else {
            state.active += 1;
            advanced = true;
        }
    } else if state.window.len() >= plan.stall_window {
        let oldest = *state.window.front().expect("window is non-empty");
        if oldest - d < plan.stall_eps && state.active < last {
            state.active += 1;
            advanced = true;
        }
    }
    if advanced {
        state.window.clear();
    } else {
        state.window.push_back(d);
        while state.window.len() > plan.stall_window {
            state.window.pop_front();
        }
    }

    Ok(u)
}

/// Verdict of one safety-filter invocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QpStatus {
    /// No certificate existed this step; the desired input passed through.
    Unconstrained,
    /// The desired input already satisfied the barrier-rate constraint.
    Inactive,
    /// The input was projected onto the constraint boundary.
    Active,
    /// No admissible input satisfies the constraint; the step executes
    /// `u = 0`.
    Infeasible,
}

impl fmt::Display for QpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            QpStatus::Unconstrained => "unconstrained",
            QpStatus::Inactive => "inactive",
            QpStatus::Active => "active",
            QpStatus::Infeasible => "infeasible",
        };
        f.write_str(s)
    }
}

/// Minimum-deviation safety filter: the closest admissible input to
/// `u_des` (Euclidean) subject to the barrier-rate halfspace
/// `∇b(x)ᵀu + λ·b(x) ≥ 0` and the speed box `|u_i| ≤ bounds[i]`.
///
/// The box projection of `u_des` is optimal whenever it already satisfies
/// the halfspace. Otherwise the constraint is active at the optimum and
/// the minimizer is `clamp(u_des + ν·∇b)` for the smallest dual value
/// `ν ≥ 0` closing the constraint — found exactly by walking the
/// breakpoints where components enter or leave saturation; the constraint
/// residual is piecewise linear and nondecreasing in `ν`, so the root sits
/// in one known segment. Without box saturation this reduces to the
/// halfspace projection `u_des + max(0, −(∇bᵀu_des + λb))/‖∇b‖² · ∇b`.
///
/// Infeasibility (`max_u ∇bᵀu + λb < 0` over the box) is reported in-band
/// as [`QpStatus::Infeasible`] with `u = 0`; the caller decides whether to
/// stop, re-sample, or abort. The barrier must be queried inside the ball
/// it was synthesized for — this function evaluates it wherever asked.
pub fn filter_input(
    cbf: &QuadraticCbf,
    x: &JointConfig,
    u_des: &[f64],
    lambda: f64,
    bounds: &[f64],
) -> Result<(Vec<f64>, QpStatus), ControlError> {
    let n = cbf.center().len();
    if x.len() != n || u_des.len() != n || bounds.len() != n {
        return Err(ControlError::Invalid(format!(
            "dimension mismatch: barrier {n}, state {}, input {}, bounds {}",
            x.len(),
            u_des.len(),
            bounds.len()
        )));
    }
    if bounds.iter().any(|b| !(*b > 0.0 && b.is_finite())) {
        return Err(ControlError::Invalid(
            "speed bounds must be positive and finite".into(),
        ));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(ControlError::Invalid(format!(
            "lambda must be ≥ 0, got {lambda}"
        )));
    }
    if u_des.iter().any(|v| !v.is_finite()) {
        return Err(ControlError::Invalid("non-finite desired input".into()));
    }

    let (b, g) = evaluate_cbf(cbf, x);
    let bias = lambda * b;

    if g.iter().all(|&gi| gi == 0.0) {
        return if bias >= 0.0 {
            Ok((clamp_box(u_des, bounds), QpStatus::Inactive))
        } else {
            Ok((vec![0.0; n], QpStatus::Infeasible))
        };
    }

    let residual_at = |nu: f64| -> f64 {
        let mut r = bias;
        for i in 0..n {
            r += g[i] * (u_des[i] + nu * g[i]).clamp(-bounds[i], bounds[i]);
        }
        r
    };

    let u0 = clamp_box(u_des, bounds);
    if residual_at(0.0) >= 0.0 {
        return Ok((u0, QpStatus::Inactive));
    }

    // Dual breakpoints: the values of ν at which component i of
    // clamp(u_des + ν·g) crosses either face of its box interval.
    let mut events: Vec<f64> = Vec::with_capacity(2 * n);
    for i in 0..n {
        if g[i] == 0.0 {
            continue;
        }
        for face in [-bounds[i], bounds[i]] {
            let t = (face - u_des[i]) / g[i];
            if t > 0.0 && t.is_finite() {
                events.push(t);
            }
        }
    }
    events.sort_by(|a, b| a.partial_cmp(b).expect("breakpoints are finite"));

    let mut lo = 0.0;
    let mut r_lo = residual_at(0.0);
    for &hi in &events {
        let r_hi = residual_at(hi);
        if r_hi >= 0.0 {
            // Root in [lo, hi]; the residual is linear on this segment.
            let nu = if r_hi > r_lo {
                lo + (hi - lo) * (-r_lo) / (r_hi - r_lo)
            } else {
                hi
            };
            let u = clamp_nu(u_des, &g, nu, bounds);
            return Ok((u, QpStatus::Active));
        }
        lo = hi;
        r_lo = r_hi;
    }

    // Past the last breakpoint every component is saturated: the residual
    // has reached its maximum over the box.
    if r_lo >= 0.0 {
        let u = clamp_nu(u_des, &g, lo, bounds);
        return Ok((u, QpStatus::Active));
    }
    Ok((vec![0.0; n], QpStatus::Infeasible))
}

fn clamp_box(u: &[f64], bounds: &[f64]) -> Vec<f64> {
    u.iter()
        .zip(bounds.iter())
        .map(|(&v, &b)| v.clamp(-b, b))
        .collect()
}

fn clamp_nu(u_des: &[f64], g: &[f64], nu: f64, bounds: &[f64]) -> Vec<f64> {
    u_des
        .iter()
        .zip(g.iter())
        .zip(bounds.iter())
        .map(|((&u, &gi), &b)| (u + nu * gi).clamp(-b, b))
        .collect()
}

/// Largest `s ∈ [0, 1]` such that scaling the input to `s·u` keeps the
/// one-step barrier decrease within its contracted rate:
/// `b(x + s·dt·u) ≥ (1 − λ·dt)·b(x)`.
///
/// Expanding the quadratic barrier makes the condition
/// `λ·dt·b + s·dt·∇bᵀu + s²·dt²·uᵀHu ≥ 0` — concave in `s` with a
/// nonnegative value at `s = 0` whenever `b(x) ≥ 0`, so the admissible set
/// is an interval `[0, s⁺]` and `s⁺` is a square root away. States outside
/// the certified set (`b < 0`) have no decrease contract; the input passes
/// unscaled.
pub fn decrease_scale(
    cbf: &QuadraticCbf,
    x: &JointConfig,
    u: &[f64],
    lambda: f64,
    dt: f64,
) -> f64 {
    let (b, g) = evaluate_cbf(cbf, x);
    if b < 0.0 {
        return 1.0;
    }
    let hu = cbf.h_matrix().apply(u);
    let quad = dt * dt * dot(u, &hu);
    let lin = dt * dot(&g, u);
    let hold = lambda * dt * b;

    if quad >= -1e-18 {
        // Numerically linear in s.
        if lin >= 0.0 || hold + lin >= 0.0 {
            1.0
        } else {
            (hold / -lin).clamp(0.0, 1.0)
        }
    } else {
        let disc = lin * lin - 4.0 * quad * hold;
        let s = (lin + disc.sqrt()) / (-2.0 * quad);
        s.clamp(0.0, 1.0)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}
