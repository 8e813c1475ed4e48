//! The fixed-step closed-loop simulator and its trace format.
//!
//! One control period: evaluate the scene distance (collision verdict),
//! synthesize a barrier certificate at the current state, compute the
//! waypoint-tracking input, filter it through the barrier-rate QP, shorten
//! it to honor the discrete decrease contract, and integrate the
//! single-integrator dynamics exactly: `x ← x + dt·u`. Every executed step
//! appends one [`StepRecord`]; the trace CSV is these records verbatim.
//!
//! With a fixed seed and configuration the dynamics are bit-reproducible;
//! the only nondeterministic column in the trace is `synth_time_ms`
//! (wall-clock measurement).

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::cbfsyn::{
    evaluate_cbf, synthesize, theory_dimension, CbfError, QuadraticCbf, SynthesisOptions,
};
use crate::consts::{
    COLLISION_EPS, DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_DT, DEFAULT_EPS, DEFAULT_LAMBDA,
    INFEASIBLE_STEP_BUDGET,
};
use crate::robot::{JointConfig, RobotModel};
use crate::scenario::required_samples;
use crate::sdfield::{overall_sdf, Scene};

use super::files::{load_plan, load_robot, load_scene};
use super::{decrease_scale, desired_input, filter_input, ControlError, QpStatus, TrackerState, WaypointPlan};

/// Knobs of one simulation run. `Default` gives the documented baseline:
/// 10 ms period, barrier-rate gain sized for `λ·dt = 0.5`, sample batches
/// sized for risk 0.1 at confidence 0.05.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Control period, seconds.
    pub dt: f64,
    /// Step budget before the run is cut off.
    pub horizon: usize,
    /// Scenario batch size per synthesis; `None` sizes it from the
    /// certificate dimension at (ε, β) = (0.1, 0.05).
    pub n_samples: Option<usize>,
    pub seed: u64,
    /// Class-K gain of the synthesis decrease rows (only used when a
    /// candidate input is passed; the simulator passes none).
    pub alpha: f64,
    /// Barrier-rate gain of the safety filter, 1/s; `λ·dt ≤ 1` required.
    pub lambda: f64,
    /// Confidence parameter for the per-step risk certificates.
    pub beta: f64,
    /// Count support constraints exactly instead of using the dimension
    /// bound (slower, tighter risk numbers in the trace).
    pub count_support: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: DEFAULT_DT,
            horizon: 20_000,
            n_samples: None,
            seed: 0,
            alpha: DEFAULT_ALPHA,
            lambda: DEFAULT_LAMBDA,
            beta: DEFAULT_BETA,
            count_support: false,
        }
    }
}

impl SimConfig {
    fn validate(&self, n: usize) -> Result<(), ControlError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(ControlError::Invalid(format!(
                "dt must be > 0, got {}",
                self.dt
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(ControlError::Invalid(format!(
                "lambda must be > 0, got {}",
                self.lambda
            )));
        }
        if self.lambda * self.dt > 1.0 {
            return Err(ControlError::Invalid(format!(
                "lambda·dt = {} must not exceed 1 (the barrier cannot decrease below zero in one step)",
                self.lambda * self.dt
            )));
        }
        if self.horizon == 0 {
            return Err(ControlError::Invalid("horizon must be ≥ 1".into()));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(ControlError::Invalid(format!(
                "beta must be in (0, 1), got {}",
                self.beta
            )));
        }
        if let Some(n_bar) = self.n_samples {
            if n_bar <= theory_dimension(n) {
                return Err(ControlError::Invalid(format!(
                    "n_samples = {n_bar} must exceed the certificate dimension {}",
                    theory_dimension(n)
                )));
            }
        }
        Ok(())
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    /// The last waypoint was reached within the switch radius with no
    /// collision along the way.
    GoalReached,
    /// The overall signed distance dropped below the collision band.
    Collision,
    /// Too many consecutive steps without a certified set or a feasible
    /// filter.
    Stuck,
    /// The step budget ran out first.
    HorizonExhausted,
}

impl fmt::Display for RunOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RunOutcome::GoalReached => "goal-reached",
            RunOutcome::Collision => "collision",
            RunOutcome::Stuck => "stuck",
            RunOutcome::HorizonExhausted => "horizon-exhausted",
        };
        f.write_str(s)
    }
}

/// One executed control step. `b_value`/`d_b` are NaN on steps without a
/// certificate (no obstacles in range, or synthesis infeasible).
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub x: JointConfig,
    pub u_des: Vec<f64>,
    /// The input actually applied: filtered and decrease-scaled.
    pub u_star: Vec<f64>,
    /// Overall signed distance at `x`, meters.
    pub sd_ov: f64,
    pub b_value: f64,
    pub d_b: f64,
    pub qp_status: QpStatus,
    pub synth_time_ms: f64,
    /// Waypoint index `u_des` was tracking.
    pub active_waypoint: usize,
}

/// End-of-run digest.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub outcome: RunOutcome,
    /// Executed steps (= trace rows).
    pub steps: usize,
    /// Minimum overall signed distance over every visited state, including
    /// the final one, meters.
    pub min_sd_ov: f64,
    /// Smallest certified apex value seen; NaN if no step was certified.
    pub min_d_b: f64,
    pub final_state: JointConfig,
    /// Waypoints passed (arrival or stall-skip), counting the goal.
    pub waypoints_reached: usize,
    pub wall_ms: f64,
    /// Total synthesis wall-clock across steps, ms.
    pub synth_ms_total: f64,
}

/// Everything a run produces: the digest, the per-step records, and the
/// per-step certificates (index-aligned with `records`; `None` on
/// uncertified steps). Certificates are kept so properties of the closed
/// loop — decrease rates, containment — can be re-checked offline.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub summary: RunSummary,
    pub records: Vec<StepRecord>,
    pub cbfs: Vec<Option<QuadraticCbf>>,
}

fn step_seed(base: u64, step: usize) -> u64 {
    // SplitMix64 over the step index, offset by the base seed: decouples
    // the per-step scenario batches while keeping them reproducible.
    let mut z = base.wrapping_add((step as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs the closed loop from `start` until goal, collision, stuck, or
/// horizon. Hard `Err` is reserved for malformed inputs; every physical
/// failure mode is a [`RunOutcome`].
pub fn run_simulation(
    model: &RobotModel,
    scene: &Scene,
    plan: &WaypointPlan,
    start: &JointConfig,
    cfg: &SimConfig,
) -> Result<RunArtifacts, ControlError> {
    let n = model.n();
    cfg.validate(n)?;
    if plan.n() != n {
        return Err(ControlError::Invalid(format!(
            "plan is {}-dimensional, robot has {n} joints",
            plan.n()
        )));
    }
    if start.len() != n {
        return Err(ControlError::Invalid(format!(
            "start has {} joints, robot has {n}",
            start.len()
        )));
    }
    if !model.within_limits(start) {
        return Err(ControlError::Invalid(
            "start configuration violates the joint limits".into(),
        ));
    }

    let wall_start = Instant::now();
    let n_base = match cfg.n_samples {
        Some(v) => v,
        None => required_samples(theory_dimension(n), DEFAULT_EPS, cfg.beta, 100_000, 1e-3)?.0,
    };
    let n_cap = n_base.saturating_mul(8);
    let bounds = model.speed_bounds();
    let (lim_lo, lim_hi) = model.limit_bounds();
    let last_wp = plan.waypoints.len() - 1;

    let mut x = start.clone();
    let mut tracker = TrackerState::new();
    let mut records: Vec<StepRecord> = Vec::new();
    let mut cbfs: Vec<Option<QuadraticCbf>> = Vec::new();
    let mut outcome = RunOutcome::HorizonExhausted;
    let mut min_sd = f64::INFINITY;
    let mut min_d_b = f64::INFINITY;
    let mut any_certified = false;
    let mut synth_ms_total = 0.0;
    let mut consecutive_infeasible = 0usize;
    let mut n_current = n_base;

    for step in 0..cfg.horizon {
        let t = step as f64 * cfg.dt;

        let sd_here = overall_sdf(model, &x, scene, t)?.sd_ov;
        min_sd = min_sd.min(sd_here);
        if sd_here < -COLLISION_EPS {
            outcome = RunOutcome::Collision;
            break;
        }
        if tracker.reached_goal()
            || (tracker.active_waypoint() == last_wp
                && x.distance(&plan.waypoints[last_wp]) <= plan.switch_radius)
        {
            outcome = RunOutcome::GoalReached;
            break;
        }

        let opts = SynthesisOptions {
            beta: cfg.beta,
            alpha: cfg.alpha,
            count_support: cfg.count_support,
            ..SynthesisOptions::default()
        };
        let synth_started = Instant::now();
        let synth = synthesize(model, scene, &x, cfg.dt, n_current, step_seed(cfg.seed, step), &opts);
        let synth_ms = match &synth {
            Ok(report) => report.solve_time_ms,
            Err(_) => synth_started.elapsed().as_secs_f64() * 1e3,
        };
        synth_ms_total += synth_ms;

        let wp = tracker.active_waypoint();
        let u_des = desired_input(plan, &mut tracker, &x, &bounds)?;

        let (u_star, b_value, d_b, qp_status, cbf) = match synth {
            Ok(report) => {
                let cbf = report.cbf;
                let (b, _) = evaluate_cbf(&cbf, &x);
                let (u_f, status) = filter_input(&cbf, &x, &u_des, cfg.lambda, &bounds)?;
                let u_applied = if status == QpStatus::Infeasible {
                    consecutive_infeasible += 1;
                    n_current = (n_current + n_current / 2).min(n_cap);
                    vec![0.0; n]
                } else {
                    consecutive_infeasible = 0;
                    n_current = n_base;
                    let s = decrease_scale(&cbf, &x, &u_f, cfg.lambda, cfg.dt);
                    u_f.iter().map(|v| s * v).collect()
                };
                any_certified = true;
                min_d_b = min_d_b.min(cbf.d_b());
                (u_applied, b, cbf.d_b(), status, Some(cbf))
            }
            Err(CbfError::NoScenarios(_)) => {
                // Nothing in range to certify against: pass through.
                consecutive_infeasible = 0;
                n_current = n_base;
                let u = clamp_to(&u_des, &bounds);
                (u, f64::NAN, f64::NAN, QpStatus::Unconstrained, None)
            }
            Err(CbfError::NoCertifiedSet { .. }) => {
                // No certificate at this state: stop for a step and retry
                // with a larger batch.
                consecutive_infeasible += 1;
                n_current = (n_current + n_current / 2).min(n_cap);
                (vec![0.0; n], f64::NAN, f64::NAN, QpStatus::Infeasible, None)
            }
            Err(other) => return Err(other.into()),
        };

        records.push(StepRecord {
            t,
            x: x.clone(),
            u_des,
            u_star: u_star.clone(),
            sd_ov: sd_here,
            b_value,
            d_b,
            qp_status,
            synth_time_ms: synth_ms,
            active_waypoint: wp,
        });
        cbfs.push(cbf);

        if consecutive_infeasible >= INFEASIBLE_STEP_BUDGET {
            outcome = RunOutcome::Stuck;
            break;
        }

        for i in 0..n {
            x.q[i] = (x.q[i] + cfg.dt * u_star[i]).clamp(lim_lo[i], lim_hi[i]);
        }
    }

    // A horizon exit leaves the final state unchecked by the loop head.
    if outcome == RunOutcome::HorizonExhausted {
        let t = records.len() as f64 * cfg.dt;
        let sd_final = overall_sdf(model, &x, scene, t)?.sd_ov;
        min_sd = min_sd.min(sd_final);
        if sd_final < -COLLISION_EPS {
            outcome = RunOutcome::Collision;
        } else if tracker.reached_goal()
            || (tracker.active_waypoint() == last_wp
                && x.distance(&plan.waypoints[last_wp]) <= plan.switch_radius)
        {
            outcome = RunOutcome::GoalReached;
        }
    }

    let summary = RunSummary {
        outcome,
        steps: records.len(),
        min_sd_ov: min_sd,
        min_d_b: if any_certified { min_d_b } else { f64::NAN },
        final_state: x,
        waypoints_reached: tracker.active_waypoint()
            + usize::from(outcome == RunOutcome::GoalReached || tracker.reached_goal()),
        wall_ms: wall_start.elapsed().as_secs_f64() * 1e3,
        synth_ms_total,
    };
    Ok(RunArtifacts {
        summary,
        records,
        cbfs,
    })
}

fn clamp_to(u: &[f64], bounds: &[f64]) -> Vec<f64> {
    u.iter()
        .zip(bounds.iter())
        .map(|(&v, &b)| v.clamp(-b, b))
        .collect()
}

/// Loads the three description files, runs the closed loop, and optionally
/// writes the trace CSV.
pub fn simulate(
    robot_path: &Path,
    scene_path: &Path,
    plan_path: &Path,
    cfg: &SimConfig,
    trace_path: Option<&Path>,
) -> Result<RunArtifacts, ControlError> {
    let model = load_robot(robot_path)?;
    let scene = load_scene(scene_path)?;
    let (plan, start) = load_plan(plan_path)?;
    let artifacts = run_simulation(&model, &scene, &plan, &start, cfg)?;
    if let Some(path) = trace_path {
        write_trace(path, model.n(), &artifacts.records)?;
    }
    Ok(artifacts)
}

fn trace_header(n: usize) -> String {
    let mut h = String::from("t");
    for i in 0..n {
        h.push_str(&format!(",x{i}"));
    }
    for i in 0..n {
        h.push_str(&format!(",u_des{i}"));
    }
    for i in 0..n {
        h.push_str(&format!(",u_star{i}"));
    }
    h.push_str(",sd_ov,b_value,d_b,qp_status,synth_time_ms,active_waypoint");
    h
}

/// Writes the trace CSV: the documented fixed header, then one row per
/// record. Floats use shortest-roundtrip formatting, so equal runs produce
/// byte-equal files (`synth_time_ms` aside — it is a wall-clock reading).
pub fn write_trace(path: &Path, n: usize, records: &[StepRecord]) -> Result<(), ControlError> {
    let io_err = |source: std::io::Error| ControlError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = String::new();
    out.push_str(&trace_header(n));
    out.push('\n');
    for r in records {
        if r.x.len() != n || r.u_des.len() != n || r.u_star.len() != n {
            return Err(ControlError::Invalid(format!(
                "record at t = {} does not match the {n}-joint header",
                r.t
            )));
        }
        let mut row = format!("{}", r.t);
        for v in &r.x.q {
            row.push_str(&format!(",{v}"));
        }
        for v in &r.u_des {
            row.push_str(&format!(",{v}"));
        }
        for v in &r.u_star {
            row.push_str(&format!(",{v}"));
        }
        row.push_str(&format!(
            ",{},{},{},{},{},{}",
            r.sd_ov, r.b_value, r.d_b, r.qp_status, r.synth_time_ms, r.active_waypoint
        ));
        out.push_str(&row);
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(io_err)?;
    f.write_all(out.as_bytes()).map_err(io_err)
}
