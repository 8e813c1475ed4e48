//! Per-step synthesis of a quadratic control barrier function from sampled
//! signed distances.
//!
//! At each control state `x_k` the one-step reachable set is
//! over-approximated by a ball `C` of radius `r = dt·‖u_max‖`. The barrier
//! is the centered quadratic
//!
//! ```text
//! b(x) = x̃ᵀ H x̃ + d_b,     x̃ = x − x_k,
//! ```
//!
//! with `H ≺ 0`, so `{b ≥ 0}` is an ellipsoid around `x_k`. Three constraint
//! families shape it:
//!
//! * **envelope** — `b(x̃ᵢ) ≤ sd_ov(x̃ᵢ)` at every sampled configuration, so
//!   the barrier under-approximates the clearance it certifies;
//! * **containment** — `−b(x) + σ₁(r² − ‖x̃‖²)` is a sum of squares for some
//!   multiplier `σ₁ ≥ 0`, equivalent to the linear matrix inequality
//!   `[[−H − σ₁I, 0], [0, σ₁r² − d_b]] ⪰ 0`, which keeps `{b ≥ 0} ⊆ C` where
//!   the sampled certificate is meaningful;
//! * **regularity** — `H ⪯ −μI`, `−H ⪯ I`, `d_b ≥ μ`, replacing the
//!   nonconvex normalization `‖H‖₂ = 1` by its convex relaxation with the
//!   objective `max d_b` pressing against the cap.
//!
//! Velocity-coupled rows `2x̃ᵢᵀHu + α·b(x̃ᵢ) ≥ 0` for a fixed candidate
//! input are available but **off by default**: for the kinematic
//! single-integrator, `u = 0` renders every superlevel set of `b` invariant
//! (the state simply stays put), and the decrease condition only binds on
//! `{b ≥ 0}` where `α·b ≥ 0` holds by definition. Enforcing it with a fixed
//! nonzero `u` at *every* sample — including those with `b < 0`, where no
//! invariance is claimed — is a strictly stronger convex restriction that is
//! frequently infeasible (antipodal sample pairs force `α·b(x̃) ≥ |2x̃ᵀHu|`).
//! Callers who want input-aligned barriers pass a candidate and optionally
//! alternate.
//!
//! Internally the program is solved in ball-normalized units `y = x̃/r`,
//! `d̂ = d_b/r²`, `ŝd = sd/r²`, which keeps all data O(1)-ish regardless of
//! `dt`; `H` is unit-free and identical in both systems.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consts::{
    ACTIVE_CONSTRAINT_TOL, DEFAULT_ALPHA, DEFAULT_BETA, PSD_MARGIN, SD_SENTINEL,
};
use crate::numerics::{sym_eigen, SymMatrix};
use crate::robot::{reachable_ball, JointConfig, ReachableBall, RobotModel};
use crate::scenario::{
    count_support_constraints, posterior_risk, RiskBound, ScenarioBatch, ScenarioBatchError,
    ScenarioError,
};
use crate::sdfield::Scene;
use crate::sdp::{solve, LmiProgram, SdpError, SdpSolution, SdpStatus};

#[cfg(test)]
mod tests;

/// Extra slack applied to the regularity constraints in the solved program
/// (not in [`assemble_program`]'s literal output) so that a solution
/// accepted at the solver's feasibility tolerance of 1e-7 still satisfies
/// the strict [`QuadraticCbf`] invariants with room to spare.
const SOLVE_TIGHTEN: f64 = 2e-7;

#[derive(Debug, Error)]
pub enum CbfError {
    #[error("invalid argument: {0}")]
    Invalid(String),
    /// Every sampled configuration was unobstructed (sentinel distance), so
    /// there is no data to certify against. Callers treat the step as
    /// unconstrained.
    #[error("no scenario constraints: all {0} sampled distances are vacuous")]
    NoScenarios(usize),
    /// The synthesis program has no solution the solver will certify — no
    /// certified invariant set exists at this state (typically: the
    /// reachable ball overlaps an obstacle too deeply).
    #[error("no certified invariant set at the requested state (solver status {status:?})")]
    NoCertifiedSet { status: SdpStatus },
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Batch(#[from] ScenarioBatchError),
}

/// A centered quadratic barrier `b(x) = (x − center)ᵀ H (x − center) + d_b`
/// with a certified-by-construction shape: `H` strictly negative definite,
/// positive apex value, spectral norm at most one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticCbf {
    center: JointConfig,
    h_matrix: SymMatrix,
    d_b: f64,
    alpha: f64,
    sigma1: f64,
}

impl QuadraticCbf {
    /// Validates the shape invariants: `λ_max(H) ≤ −1e-6`, `d_b ≥ 1e-6`,
    /// `‖H‖₂ ≤ 1 + 1e-9`, `alpha > 0`, `sigma1 ≥ 0`, all entries finite.
    pub fn new(
        center: JointConfig,
        h_matrix: SymMatrix,
        d_b: f64,
        alpha: f64,
        sigma1: f64,
    ) -> Result<Self, CbfError> {
        let n = center.len();
        if n == 0 || h_matrix.dim() != n {
            return Err(CbfError::Invalid(format!(
                "H is {}×{0} but the center has {} joints",
                h_matrix.dim(),
                n
            )));
        }
        if !d_b.is_finite() || !alpha.is_finite() || !sigma1.is_finite() {
            return Err(CbfError::Invalid("non-finite barrier parameter".into()));
        }
        if center.q.iter().any(|v| !v.is_finite()) {
            return Err(CbfError::Invalid("non-finite center".into()));
        }
        let eig = sym_eigen(&h_matrix).map_err(|e| CbfError::Invalid(e.to_string()))?;
        let (lo, hi) = (eig.min_eigenvalue(), eig.max_eigenvalue());
        if hi > -PSD_MARGIN {
            return Err(CbfError::Invalid(format!(
                "H must satisfy λ_max ≤ −{PSD_MARGIN:e}, got {hi:e}"
            )));
        }
        if lo.abs().max(hi.abs()) > 1.0 + 1e-9 {
            return Err(CbfError::Invalid(format!(
                "‖H‖₂ must be ≤ 1 + 1e-9, got {:e}",
                lo.abs().max(hi.abs())
            )));
        }
        if d_b < PSD_MARGIN {
            return Err(CbfError::Invalid(format!(
                "d_b must be ≥ {PSD_MARGIN:e}, got {d_b:e}"
            )));
        }
        if alpha <= 0.0 {
            return Err(CbfError::Invalid(format!("alpha must be > 0, got {alpha}")));
        }
        if sigma1 < 0.0 {
            return Err(CbfError::Invalid(format!(
                "sigma1 must be ≥ 0, got {sigma1}"
            )));
        }
        Ok(QuadraticCbf {
            center,
            h_matrix,
            d_b,
            alpha,
            sigma1,
        })
    }

    pub fn center(&self) -> &JointConfig {
        &self.center
    }

    pub fn h_matrix(&self) -> &SymMatrix {
        &self.h_matrix
    }

    pub fn d_b(&self) -> f64 {
        self.d_b
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }

    /// Radius bound of the superlevel set: every `x` with `b(x) ≥ 0` has
    /// `‖x − center‖ ≤ sqrt(d_b / λ_min(−H))`.
    pub fn superlevel_radius(&self) -> f64 {
        let eig = sym_eigen(&self.h_matrix).expect("validated at construction");
        (self.d_b / (-eig.max_eigenvalue())).sqrt()
    }
}

/// Barrier value and gradient at `x`: `(x̃ᵀHx̃ + d_b, 2Hx̃)`.
pub fn evaluate_cbf(cbf: &QuadraticCbf, x: &JointConfig) -> (f64, Vec<f64>) {
    assert_eq!(
        x.len(),
        cbf.center.len(),
        "configuration dimension mismatch"
    );
    let xt: Vec<f64> = x
        .q
        .iter()
        .zip(cbf.center.q.iter())
        .map(|(a, b)| a - b)
        .collect();
    let value = cbf.h_matrix.quad_form(&xt) + cbf.d_b;
    let gradient = cbf.h_matrix.apply(&xt).iter().map(|v| 2.0 * v).collect();
    (value, gradient)
}

/// The synthesis program plus the bookkeeping needed to interpret its rows.
#[derive(Debug, Clone)]
pub struct AssembledProgram {
    pub program: LmiProgram,
    /// For each batch sample: the program row of its envelope constraint,
    /// `None` when the sample saw no obstacle (sentinel distance) and was
    /// dropped as vacuous.
    pub envelope_rows: Vec<Option<usize>>,
    /// For each batch sample: the row of its velocity-coupled decrease
    /// constraint; all `None` when no input candidate was supplied.
    pub invariance_rows: Vec<Option<usize>>,
    /// The offset decision variable is `d_b / scale` (scale = r²); `H` and
    /// `σ₁` are unscaled.
    pub scale: f64,
}

impl AssembledProgram {
    /// Indices of all sample-generated rows (the scenario constraints).
    pub fn scenario_rows(&self) -> Vec<usize> {
        self.envelope_rows
            .iter()
            .chain(self.invariance_rows.iter())
            .filter_map(|r| *r)
            .collect()
    }
}

fn pack_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < n);
    i * (2 * n - i + 1) / 2 + (j - i)
}

/// Builds the synthesis program for one state.
///
/// Decision vector: packed upper triangle of `H` (length n(n+1)/2), then
/// `d̂ = d_b/r²`, then `σ₁`. Constraints, written in ball-normalized
/// coordinates `y = (x − x_k)/r` (each is the literal physical constraint
/// divided by `r² > 0`):
///
/// * per sample with finite distance: `yᵢᵀHyᵢ + d̂ ≤ sd_ov(xᵢ)/r²`;
/// * per sample, when `u_candidate` is supplied:
///   `(2/r)·yᵢᵀHu + α(yᵢᵀHyᵢ + d̂) ≥ 0`;
/// * one PSD block `diag(−H − σ₁I, σ₁ − d̂, −H − μI, I + H) ⪰ 0`
///   (containment LMI and the two-sided regularity bounds on `H`);
/// * scalar rows `d̂ ≥ μ/r²` and `σ₁ ≥ 0`;
/// * objective: maximize `d̂`.
///
/// `margin_tighten` strengthens the regularity constraints and is zero for
/// the public entry point; [`synthesize`] passes [`SOLVE_TIGHTEN`] so its
/// accepted solutions satisfy the strict [`QuadraticCbf`] invariants.
pub fn assemble_program(
    model: &RobotModel,
    x_k: &JointConfig,
    ball: &ReachableBall,
    batch: &ScenarioBatch,
    u_candidate: Option<&[f64]>,
    alpha: f64,
) -> Result<AssembledProgram, CbfError> {
    assemble_inner(model, x_k, ball, batch, u_candidate, alpha, 0.0)
}

fn assemble_inner(
    model: &RobotModel,
    x_k: &JointConfig,
    ball: &ReachableBall,
    batch: &ScenarioBatch,
    u_candidate: Option<&[f64]>,
    alpha: f64,
    margin_tighten: f64,
) -> Result<AssembledProgram, CbfError> {
    let n = model.n();
    if x_k.len() != n {
        return Err(CbfError::Invalid(format!(
            "state has {} joints, model has {n}",
            x_k.len()
        )));
    }
    if ball.center.q != x_k.q {
        return Err(CbfError::Invalid(
            "reachable ball is not centered at the synthesis state".into(),
        ));
    }
    let r = ball.radius;
    if !(r > 0.0) || !r.is_finite() {
        return Err(CbfError::Invalid(format!("ball radius must be > 0, got {r}")));
    }
    let r2 = r * r;
    let d_hat_floor = PSD_MARGIN / r2 + margin_tighten;
    if d_hat_floor > 0.5 {
        return Err(CbfError::Invalid(format!(
            "ball radius {r:.3e} is too small for the barrier margin: \
             d_b ≥ {PSD_MARGIN:e} forces d_b/r² ≥ {d_hat_floor:.3} > 0.5, \
             leaving no certifiable volume"
        )));
    }
    if batch.samples.len() != batch.sdf.len() || batch.samples.is_empty() {
        return Err(CbfError::Invalid(
            "batch must hold at least one sample with aligned distances".into(),
        ));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(CbfError::Invalid(format!("alpha must be > 0, got {alpha}")));
    }
    if let Some(u) = u_candidate {
        if u.len() != n {
            return Err(CbfError::Invalid(format!(
                "input candidate has {} entries, model has {n} joints",
                u.len()
            )));
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(CbfError::Invalid("non-finite input candidate".into()));
        }
    }

    let n_h = n * (n + 1) / 2;
    let e = n_h + 2;
    let (id_d, id_s) = (n_h, n_h + 1);
    let dim = 3 * n + 1;

    // PSD block: rows/cols 0..n and the (n,n) corner hold the containment
    // LMI; n+1..2n+1 hold −H − μI; 2n+1..3n+1 hold I + H.
    let mut f0 = SymMatrix::zeros(dim);
    for i in 0..n {
        f0.set(i, i, -margin_tighten);
        f0.set(n + 1 + i, n + 1 + i, -(PSD_MARGIN + margin_tighten));
        f0.set(2 * n + 1 + i, 2 * n + 1 + i, 1.0 - margin_tighten);
    }
    f0.set(n, n, -margin_tighten);

    let mut fs = vec![SymMatrix::zeros(dim); e];
    for i in 0..n {
        for j in i..n {
            let f = &mut fs[pack_index(n, i, j)];
            f.set(i, j, -1.0); // −H in the containment block
            f.set(n + 1 + i, n + 1 + j, -1.0); // −H − μI block
            f.set(2 * n + 1 + i, 2 * n + 1 + j, 1.0); // I + H block
        }
    }
    for i in 0..n {
        fs[id_s].set(i, i, -1.0); // −σ₁I
    }
    fs[id_s].set(n, n, 1.0); // +σ₁ in the scalar corner
    fs[id_d].set(n, n, -1.0); // −d̂ in the scalar corner

    let mut objective = vec![0.0; e];
    objective[id_d] = 1.0;
    let mut program = LmiProgram::new(objective, f0, fs).map_err(CbfError::Sdp)?;

    let mut envelope_rows = vec![None; batch.samples.len()];
    let mut invariance_rows = vec![None; batch.samples.len()];
    let mut kept = 0usize;
    for (idx, (sample, sdf)) in batch.samples.iter().zip(batch.sdf.iter()).enumerate() {
        if sample.len() != n {
            return Err(CbfError::Invalid(format!(
                "sample {idx} has {} joints, model has {n}",
                sample.len()
            )));
        }
        let y: Vec<f64> = sample
            .q
            .iter()
            .zip(x_k.q.iter())
            .map(|(a, b)| (a - b) / r)
            .collect();
        let y_norm2: f64 = y.iter().map(|v| v * v).sum();
        if y_norm2 > 1.0 + 1e-6 {
            return Err(CbfError::Invalid(format!(
                "sample {idx} lies outside the reachable ball (‖y‖ = {:.6})",
                y_norm2.sqrt()
            )));
        }

        if sdf.sd_ov < SD_SENTINEL && sdf.sd_ov.is_finite() {
            // yᵀHy + d̂ ≤ ŝd  ⇒  row −Σ q_ij h_ij − d̂ + ŝd ≥ 0, with
            // q_ii = y_i², q_ij = 2y_iy_j.
            let mut a = vec![0.0; e];
            for i in 0..n {
                for j in i..n {
                    let q = if i == j { y[i] * y[i] } else { 2.0 * y[i] * y[j] };
                    a[pack_index(n, i, j)] = -q;
                }
            }
            a[id_d] = -1.0;
            program
                .add_row(a, sdf.sd_ov / r2)
                .map_err(CbfError::Sdp)?;
            envelope_rows[idx] = Some(program.num_rows() - 1);
            kept += 1;
        }

        if let Some(u) = u_candidate {
            // (2/r)·yᵀHu + α(yᵀHy + d̂) ≥ 0.
            let mut a = vec![0.0; e];
            for i in 0..n {
                for j in i..n {
                    let lin = if i == j {
                        y[i] * u[i]
                    } else {
                        y[i] * u[j] + y[j] * u[i]
                    };
                    let quad = if i == j { y[i] * y[i] } else { 2.0 * y[i] * y[j] };
                    a[pack_index(n, i, j)] = (2.0 / r) * lin + alpha * quad;
                }
            }
            a[id_d] = alpha;
            program.add_row(a, 0.0).map_err(CbfError::Sdp)?;
            invariance_rows[idx] = Some(program.num_rows() - 1);
        }
    }
    if kept == 0 {
        return Err(CbfError::NoScenarios(batch.samples.len()));
    }

    let mut a = vec![0.0; e];
    a[id_d] = 1.0;
    program.add_row(a, -d_hat_floor).map_err(CbfError::Sdp)?;
    let mut a = vec![0.0; e];
    a[id_s] = 1.0;
    program.add_row(a, 0.0).map_err(CbfError::Sdp)?;

    Ok(AssembledProgram {
        program,
        envelope_rows,
        invariance_rows,
        scale: r2,
    })
}

/// Everything [`synthesize`] needs beyond the spec-level positional
/// arguments, bundled with working defaults.
#[derive(Debug, Clone)]
pub struct SynthesisOptions {
    /// Fixed input candidate for the velocity-coupled decrease rows; `None`
    /// omits them (the `u = 0` reading — see the module docs).
    pub u_candidate: Option<Vec<f64>>,
    /// Class-K coefficient of the decrease rows.
    pub alpha: f64,
    /// Total solve rounds when alternating on the input candidate; 1 means
    /// a single solve, and the value is ignored without a candidate.
    pub rounds: usize,
    /// Scene time at which moving obstacles are placed.
    pub eval_time: f64,
    /// Count support constraints exactly by leave-one-out re-solves.
    /// Off by default: the conservative complexity `c* = e` keeps the
    /// per-step cost at one SDP solve, and its risk bound is valid (upper
    /// risk is monotone in the complexity, and the true count never
    /// exceeds `e`).
    pub count_support: bool,
    /// Confidence parameter of the returned risk interval.
    pub beta: f64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        SynthesisOptions {
            u_candidate: None,
            alpha: DEFAULT_ALPHA,
            rounds: 1,
            eval_time: 0.0,
            count_support: false,
            beta: DEFAULT_BETA,
        }
    }
}

/// One synthesized barrier with its scenario evidence.
#[derive(Debug, Clone)]
pub struct SynthesisReport {
    pub cbf: QuadraticCbf,
    /// Samples drawn (the risk bound's N̄).
    pub n_samples: usize,
    /// Per-sample activity: `true` when one of the sample's constraints is
    /// tight at the optimum; vacuous (sentinel) samples are `false`.
    pub active: Vec<bool>,
    /// Complexity the risk interval was evaluated at.
    pub c_star: usize,
    pub risk: RiskBound,
    /// Wall-clock synthesis time. Excluded from determinism comparisons.
    pub solve_time_ms: f64,
    /// Solver iterations of the accepted round.
    pub iterations: usize,
    /// Solve rounds actually performed.
    pub rounds_used: usize,
}

/// Dimension count the scenario theory certifies against: inputs plus the
/// full (unsymmetrized) quadratic coefficient matrix plus `d_b` and `σ₁`.
pub fn theory_dimension(n: usize) -> usize {
    n + n * n + 2
}

/// Draws a scenario batch over the one-step reachable ball at `x_k`,
/// assembles the synthesis program, solves it (optionally alternating on
/// the input candidate), and returns the barrier with a posterior risk
/// certificate.
pub fn synthesize(
    model: &RobotModel,
    scene: &Scene,
    x_k: &JointConfig,
    dt: f64,
    n_bar: usize,
    seed: u64,
    options: &SynthesisOptions,
) -> Result<SynthesisReport, CbfError> {
    let started = Instant::now();
    let n = model.n();
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(CbfError::Invalid(format!("dt must be > 0, got {dt}")));
    }
    let e_theory = theory_dimension(n);
    if n_bar <= e_theory {
        return Err(CbfError::Invalid(format!(
            "n_bar = {n_bar} must exceed the certificate dimension e = {e_theory}"
        )));
    }
    if options.rounds == 0 {
        return Err(CbfError::Invalid("rounds must be ≥ 1".into()));
    }
    let ball = reachable_ball(model, x_k, dt).map_err(|e| CbfError::Invalid(e.to_string()))?;
    let batch = ScenarioBatch::draw(model, scene, &ball, n_bar, seed, options.eval_time)?;

    // Clamp the candidate into the admissible box; the decrease rows are
    // only meaningful for inputs the filter could actually emit.
    if let Some(u) = &options.u_candidate {
        if u.len() != n {
            return Err(CbfError::Invalid(format!(
                "input candidate has {} entries, model has {n} joints",
                u.len()
            )));
        }
    }
    let bounds = model.speed_bounds();
    let mut u_current = options.u_candidate.as_ref().map(|u| {
        u.iter()
            .zip(bounds.iter())
            .map(|(v, &m)| v.clamp(-m, m))
            .collect::<Vec<f64>>()
    });

    let rounds = if u_current.is_some() { options.rounds } else { 1 };
    let mut best: Option<(f64, AssembledProgram, SdpSolution)> = None;
    let mut rounds_used = 0usize;
    for _ in 0..rounds {
        let assembled = assemble_inner(
            model,
            x_k,
            &ball,
            &batch,
            u_current.as_deref(),
            options.alpha,
            SOLVE_TIGHTEN,
        )?;
        let sol = solve(&assembled.program)?;
        rounds_used += 1;
        if sol.status != SdpStatus::Optimal {
            if best.is_none() {
                return Err(CbfError::NoCertifiedSet { status: sol.status });
            }
            break;
        }
        let d_hat = sol.z[n * (n + 1) / 2];
        let improved = best.as_ref().map_or(true, |(d, _, _)| d_hat > *d + 1e-12);
        if improved {
            best = Some((d_hat, assembled, sol));
        }

        if rounds_used == rounds {
            break;
        }
        let Some(u_prev) = &u_current else { break };
        let (_, ref assembled_now, ref sol_now) = *best.as_ref().expect("set above");
        let next = realign_candidate(model, x_k, &batch, assembled_now, sol_now, u_prev, options.alpha);
        if next
            .iter()
            .zip(u_prev.iter())
            .all(|(a, b)| (a - b).abs() <= 1e-12)
        {
            break;
        }
        u_current = Some(next);
    }

    let (_, assembled, sol) = best.expect("loop either returned early or set a solution");
    let n_h = n * (n + 1) / 2;
    let h_matrix = SymMatrix::from_fn(n, |i, j| sol.z[pack_index(n, i, j)]);
    let d_b = sol.z[n_h] * assembled.scale;
    let sigma1 = sol.z[n_h + 1];
    let cbf = QuadraticCbf::new(x_k.clone(), h_matrix, d_b, options.alpha, sigma1)?;

    let scenario_rows = assembled.scenario_rows();
    let c_star = if options.count_support {
        let counted = count_support_constraints(&assembled.program, &sol, &scenario_rows)?;
        // The scenario theory caps the true support count at the decision
        // dimension; conservative over-counts (ties, re-solve failures) are
        // clamped to the worst case the bound covers.
        counted.min(e_theory)
    } else {
        e_theory
    };
    let risk = posterior_risk(c_star, n_bar, options.beta)?;

    let active: Vec<bool> = (0..batch.samples.len())
        .map(|i| {
            [assembled.envelope_rows[i], assembled.invariance_rows[i]]
                .iter()
                .flatten()
                .any(|&r| assembled.program.row_value(r, &sol.z) <= ACTIVE_CONSTRAINT_TOL)
        })
        .collect();

    Ok(SynthesisReport {
        cbf,
        n_samples: n_bar,
        active,
        c_star,
        risk,
        solve_time_ms: started.elapsed().as_secs_f64() * 1e3,
        iterations: sol.iterations,
        rounds_used,
    })
}

/// One alternation sweep: with `H` fixed, re-pick each input coordinate's
/// sign (at the box bound) to maximize the smallest decrease-row margin
/// `2x̃ᵢᵀHu + α·b(x̃ᵢ)` over the samples.
fn realign_candidate(
    model: &RobotModel,
    x_k: &JointConfig,
    batch: &ScenarioBatch,
    assembled: &AssembledProgram,
    sol: &SdpSolution,
    u_prev: &[f64],
    alpha: f64,
) -> Vec<f64> {
    let n = model.n();
    let bounds = model.speed_bounds();
    let h = SymMatrix::from_fn(n, |i, j| sol.z[pack_index(n, i, j)]);
    let d_b = sol.z[n * (n + 1) / 2] * assembled.scale;

    // Per-sample gradient 2Hx̃ᵢ and base term α·b(x̃ᵢ).
    let mut grads = Vec::with_capacity(batch.samples.len());
    let mut bases = Vec::with_capacity(batch.samples.len());
    for sample in &batch.samples {
        let xt: Vec<f64> = sample
            .q
            .iter()
            .zip(x_k.q.iter())
            .map(|(a, b)| a - b)
            .collect();
        let g: Vec<f64> = h.apply(&xt).iter().map(|v| 2.0 * v).collect();
        bases.push(alpha * (h.quad_form(&xt) + d_b));
        grads.push(g);
    }
    let min_margin = |u: &[f64]| -> f64 {
        grads
            .iter()
            .zip(bases.iter())
            .map(|(g, b)| g.iter().zip(u).map(|(gi, ui)| gi * ui).sum::<f64>() + b)
            .fold(f64::INFINITY, f64::min)
    };

    let mut u = u_prev.to_vec();
    for j in 0..n {
        let mut best_v = u[j];
        let mut best_m = min_margin(&u);
        for cand in [bounds[j], -bounds[j]] {
            let mut trial = u.clone();
            trial[j] = cand;
            let m = min_margin(&trial);
            if m > best_m + 1e-15 {
                best_m = m;
                best_v = cand;
            }
        }
        u[j] = best_v;
    }
    u
}
