//! Infeasible-start primal-dual interior-point iteration.
//!
//! The program is handled in the form
//!
//! ```text
//! max c·z   s.t.  S = F₀ + Σ zᵢFᵢ ⪰ 0,   sᵣ = aᵣ·z + bᵣ ≥ 0
//! ```
//!
//! with matrix dual `Y ⪰ 0` and row duals `y ≥ 0`. KKT:
//!
//! ```text
//! primal:  F₀ + A(z) − S = 0,  aᵣ·z + bᵣ − sᵣ = 0
//! dual:    cᵢ + ⟨Fᵢ, Y⟩ + Σᵣ aᵣᵢ yᵣ = 0
//! compl.:  SY = 0,  sᵣyᵣ = 0
//! ```
//!
//! Search directions come from the HKM linearization of the perturbed
//! complementarity `SY = σμI`, eliminating `ΔS = A(Δz) + Rp` and
//! `ΔY = σμS⁻¹ − Y − S⁻¹(ΔS·Y + Ξ)` (Ξ is Mehrotra's second-order term)
//! into the Schur system
//!
//! ```text
//! [⟨Fᵢ, S⁻¹FⱼY⟩ + Σᵣ (yᵣ/sᵣ) aᵣᵢaᵣⱼ] Δz = Rdᵢ + ⟨Fᵢ, B⟩ + Σᵣ aᵣᵢ βᵣ
//! B  = σμS⁻¹ − Y − S⁻¹(RpY + Ξ)
//! βᵣ = (σμ − ξᵣ)/sᵣ − yᵣ − (yᵣ/sᵣ)·rpᵣ
//! ```
//!
//! The Schur matrix is symmetrized before factoring (standard for HKM) and
//! ridge-regularized on Cholesky failure. Steps use a fraction-to-boundary
//! rule with eigenvalue-exact maximal step lengths.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::{LmiProgram, SdpError, SdpSolution, SdpStatus};
use crate::consts::{SDP_KKT_TOL, SDP_MAX_ITERATIONS, SDP_PSD_TOL};

pub(super) fn solve_with_phase1(program: &LmiProgram) -> Result<SdpSolution, SdpError> {
    if program.psd_dim() == 0 && program.num_rows() == 0 {
        return Err(SdpError::Invalid(
            "program has no constraints; the objective is unbounded".into(),
        ));
    }
    let mut main = run(program);
    if main.status == SdpStatus::Optimal {
        return Ok(main);
    }
    // Inconclusive: classify via phase-I `max τ s.t. block ⪰ τI, rows ≥ τ,
    // τ ≤ 1`, which is always strictly feasible. A negative optimal margin
    // certifies that the original constraint set is empty.
    let aux = run(&phase1_program(program));
    if aux.status == SdpStatus::Optimal {
        let margin = aux.objective_value;
        main.phase1_margin = Some(margin);
        if margin < -10.0 * SDP_KKT_TOL {
            main.status = SdpStatus::Infeasible;
        }
    }
    Ok(main)
}

fn phase1_program(p: &LmiProgram) -> LmiProgram {
    let e = p.num_vars();
    let d = p.psd_dim();
    let mut objective = vec![0.0; e + 1];
    objective[e] = 1.0;
    let mut fs: Vec<crate::numerics::SymMatrix> = p.fs().to_vec();
    fs.push(crate::numerics::SymMatrix::scaled_identity(d, -1.0));
    let mut p1 = LmiProgram::new(objective, p.f0().clone(), fs)
        .expect("phase-I construction from a validated program cannot fail");
    for (a, b) in p.rows() {
        let mut row = a.clone();
        row.push(-1.0);
        p1.add_row(row, *b).expect("validated row");
    }
    let mut cap = vec![0.0; e + 1];
    cap[e] = -1.0;
    p1.add_row(cap, 1.0).expect("validated row");
    p1
}

/// Dense snapshot of the program data the iteration works on.
struct Data {
    e: usize,
    d: usize,
    m: usize,
    c: DVector<f64>,
    f0: DMatrix<f64>,
    fs: Vec<DMatrix<f64>>,
    /// m×e row-coefficient matrix.
    a: DMatrix<f64>,
    b: DVector<f64>,
    f0_norm: f64,
    c_norm: f64,
    b_norm: f64,
}

impl Data {
    fn from(p: &LmiProgram) -> Data {
        let e = p.num_vars();
        let d = p.psd_dim();
        let m = p.num_rows();
        let to_dense = |s: &crate::numerics::SymMatrix| {
            DMatrix::from_fn(s.dim(), s.dim(), |i, j| s.get(i, j))
        };
        let a = DMatrix::from_fn(m, e, |r, i| p.rows()[r].0[i]);
        let b = DVector::from_fn(m, |r, _| p.rows()[r].1);
        let f0 = to_dense(p.f0());
        Data {
            e,
            d,
            m,
            c: DVector::from_column_slice(p.objective()),
            f0_norm: f0.norm(),
            f0,
            fs: p.fs().iter().map(to_dense).collect(),
            c_norm: p.objective().iter().fold(0.0f64, |acc, v| acc.max(v.abs())),
            b_norm: (0..m).fold(0.0f64, |acc, r| acc.max(p.rows()[r].1.abs())),
            a,
            b,
        }
    }

    /// `Σ Δzⱼ Fⱼ`.
    fn apply(&self, dz: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.d, self.d);
        for (j, f) in self.fs.iter().enumerate() {
            out += f * dz[j];
        }
        out
    }
}

struct Direction {
    dz: DVector<f64>,
    ds_mat: DMatrix<f64>,
    dy_mat: DMatrix<f64>,
    ds: DVector<f64>,
    dy: DVector<f64>,
}

fn run(program: &LmiProgram) -> SdpSolution {
    let data = Data::from(program);
    let (e, d, m) = (data.e, data.d, data.m);
    let total = (d + m).max(1) as f64;

    // Analytic-centering-flavored start: scaled identities sized to the
    // data so the first iterations are neither swamped nor starved.
    let mut z = DVector::zeros(e);
    let mut s_mat = DMatrix::identity(d, d) * (1.0 + data.f0_norm);
    let mut y_mat = DMatrix::identity(d, d) * (1.0 + data.c_norm);
    let mut s = DVector::from_fn(m, |r, _| 1.0 + data.b[r].abs());
    let mut y = DVector::from_element(m, 1.0 + data.c_norm);

    let mut best: Option<(f64, DVector<f64>, usize)> = None;
    // Best iterate that already clears the advertised tolerance. We keep
    // iterating past it — terminal convergence is superlinear, so one or two
    // more steps buy several digits — and fall back to it if the tighter
    // polish target is out of numerical reach.
    let mut accepted: Option<(f64, DVector<f64>)> = None;
    let polish_tol = SDP_KKT_TOL * 1e-3;
    let mut stalls = 0usize;
    let mut iterations = 0usize;

    for iter in 0..SDP_MAX_ITERATIONS {
        iterations = iter + 1;

        // Residuals and optimality measures.
        let rp_mat = if d > 0 {
            &data.f0 + data.apply(&z) - &s_mat
        } else {
            DMatrix::zeros(0, 0)
        };
        let rp = if m > 0 {
            &data.a * &z + &data.b - &s
        } else {
            DVector::zeros(0)
        };
        let mut rd = DVector::zeros(e);
        for i in 0..e {
            let mut v = data.c[i];
            if d > 0 {
                v += data.fs[i].dot(&y_mat);
            }
            for r in 0..m {
                v += data.a[(r, i)] * y[r];
            }
            rd[i] = v;
        }
        let gap = if d > 0 { s_mat.dot(&y_mat) } else { 0.0 } + s.dot(&y);
        let mu = gap / total;
        let pobj = data.c.dot(&z);
        let dobj = if d > 0 { data.f0.dot(&y_mat) } else { 0.0 } + data.b.dot(&y);
        let inf_norm = |v: &DVector<f64>| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let rel_p =
            (rp_mat.norm() / (1.0 + data.f0_norm)).max(inf_norm(&rp) / (1.0 + data.b_norm));
        let rel_d = inf_norm(&rd) / (1.0 + data.c_norm);
        let rel_g = gap.abs() / (1.0 + pobj.abs() + dobj.abs());
        let kkt = rel_p.max(rel_d).max(rel_g);

        if !kkt.is_finite() || z.iter().any(|v| !v.is_finite()) {
            break;
        }
        if best.as_ref().map_or(true, |(k, _, _)| kkt < *k) {
            best = Some((kkt, z.clone(), iter));
        }
        if kkt <= SDP_KKT_TOL
            && direct_feasible(program, z.as_slice())
            && accepted.as_ref().map_or(true, |(k, _)| kkt < *k)
        {
            accepted = Some((kkt, z.clone()));
        }
        if let Some((k, z_acc)) = &accepted {
            if *k <= polish_tol {
                return finish(program, z_acc.clone(), SdpStatus::Optimal, *k, iterations);
            }
        }

        // Factor the current slacks; they are kept PD by the step rule, so
        // failure means we have hit numerical bottom.
        let chol_s = if d > 0 {
            match chol_pd(&s_mat) {
                Some(c) => Some(c),
                None => break,
            }
        } else {
            None
        };
        let chol_y = if d > 0 {
            match chol_pd(&y_mat) {
                Some(c) => Some(c),
                None => break,
            }
        } else {
            None
        };
        let s_inv = chol_s
            .as_ref()
            .map(|c| c.inverse())
            .unwrap_or_else(|| DMatrix::zeros(0, 0));

        // Schur matrix: ⟨Fᵢ, S⁻¹FⱼY⟩ symmetrized plus row rank-ones.
        let mut schur = DMatrix::zeros(e, e);
        if d > 0 {
            let g: Vec<DMatrix<f64>> = data
                .fs
                .iter()
                .map(|f| &s_inv * &(f * &y_mat))
                .collect();
            for i in 0..e {
                for j in 0..e {
                    schur[(i, j)] = data.fs[i].dot(&g[j]);
                }
            }
            schur = (&schur + schur.transpose()) * 0.5;
        }
        for r in 0..m {
            let w = y[r] / s[r];
            for i in 0..e {
                let awi = w * data.a[(r, i)];
                if awi == 0.0 {
                    continue;
                }
                for j in 0..e {
                    schur[(i, j)] += awi * data.a[(r, j)];
                }
            }
        }
        let chol_m = match chol_ridge(&schur) {
            Some(c) => c,
            None => break,
        };

        let solve_direction = |sigma_mu: f64,
                               xi_mat: &DMatrix<f64>,
                               xi: &DVector<f64>|
         -> Direction {
            // B = σμS⁻¹ − Y − S⁻¹(RpY + Ξ);  βᵣ = (σμ−ξᵣ)/sᵣ − yᵣ − (yᵣ/sᵣ)rpᵣ
            let mut h = rd.clone();
            let b_mat = if d > 0 {
                let mut bm = &s_inv * sigma_mu - &y_mat;
                bm -= &s_inv * &(&rp_mat * &y_mat + xi_mat);
                bm
            } else {
                DMatrix::zeros(0, 0)
            };
            if d > 0 {
                for i in 0..e {
                    h[i] += data.fs[i].dot(&b_mat);
                }
            }
            let mut beta = DVector::zeros(m);
            for r in 0..m {
                beta[r] = (sigma_mu - xi[r]) / s[r] - y[r] - (y[r] / s[r]) * rp[r];
                for i in 0..e {
                    h[i] += data.a[(r, i)] * beta[r];
                }
            }
            let dz = chol_m.solve(&h);
            let ds_mat = if d > 0 {
                data.apply(&dz) + &rp_mat
            } else {
                DMatrix::zeros(0, 0)
            };
            let dy_mat = if d > 0 {
                let raw = &s_inv * sigma_mu - &y_mat - &s_inv * &(&ds_mat * &y_mat + xi_mat);
                (&raw + raw.transpose()) * 0.5
            } else {
                DMatrix::zeros(0, 0)
            };
            let ds = if m > 0 {
                &data.a * &dz + &rp
            } else {
                DVector::zeros(0)
            };
            let mut dy = DVector::zeros(m);
            for r in 0..m {
                dy[r] = (sigma_mu - xi[r]) / s[r] - y[r] - (y[r] / s[r]) * ds[r];
            }
            Direction {
                dz,
                ds_mat,
                dy_mat,
                ds,
                dy,
            }
        };

        // Predictor (affine-scaling) direction.
        let zero_mat = DMatrix::zeros(d, d);
        let zero_vec = DVector::zeros(m);
        let aff = solve_direction(0.0, &zero_mat, &zero_vec);
        let ap_aff = max_step(chol_s.as_ref(), &aff.ds_mat, &s, &aff.ds).min(1.0);
        let ad_aff = max_step(chol_y.as_ref(), &aff.dy_mat, &y, &aff.dy).min(1.0);
        let gap_aff = if d > 0 {
            (&s_mat + &aff.ds_mat * ap_aff).dot(&(&y_mat + &aff.dy_mat * ad_aff))
        } else {
            0.0
        } + (&s + &aff.ds * ap_aff).dot(&(&y + &aff.dy * ad_aff));
        let mu_aff = (gap_aff / total).max(0.0);
        let sigma = ((mu_aff / mu).powi(3)).clamp(1e-10, 1.0);

        // Corrector with Mehrotra's second-order term Ξ = ΔSₐΔYₐ.
        let xi_mat = if d > 0 {
            &aff.ds_mat * &aff.dy_mat
        } else {
            DMatrix::zeros(0, 0)
        };
        let xi = DVector::from_fn(m, |r, _| aff.ds[r] * aff.dy[r]);
        let dir = solve_direction(sigma * mu, &xi_mat, &xi);

        // Fraction-to-boundary step, slightly bolder once nearly converged.
        let tau = if kkt < 1e-3 { 0.98 } else { 0.95 };
        let ap = (tau * max_step(chol_s.as_ref(), &dir.ds_mat, &s, &dir.ds)).min(1.0);
        let ad = (tau * max_step(chol_y.as_ref(), &dir.dy_mat, &y, &dir.dy)).min(1.0);

        if ap < 1e-10 && ad < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }

        z += &dir.dz * ap;
        if d > 0 {
            s_mat += &dir.ds_mat * ap;
            y_mat += &dir.dy_mat * ad;
        }
        if m > 0 {
            s += &dir.ds * ap;
            y += &dir.dy * ad;
        }
        if z.iter().fold(0.0f64, |a, &v| a.max(v.abs())) > 1e13 {
            break; // diverging (unbounded or numerically lost)
        }
    }

    if let Some((kkt, z_acc)) = accepted {
        return finish(program, z_acc, SdpStatus::Optimal, kkt, iterations);
    }
    let (kkt, z_best, _) = best.unwrap_or((f64::INFINITY, DVector::zeros(e), 0));
    finish(program, z_best, SdpStatus::MaxIter, kkt, iterations)
}

fn finish(
    program: &LmiProgram,
    z: DVector<f64>,
    status: SdpStatus,
    kkt: f64,
    iterations: usize,
) -> SdpSolution {
    let objective_value = program
        .objective()
        .iter()
        .zip(z.iter())
        .map(|(c, zi)| c * zi)
        .sum();
    SdpSolution {
        psd_min_eig: block_min_eig(program, z.as_slice()),
        objective_value,
        z: z.as_slice().to_vec(),
        status,
        kkt_residual: kkt,
        iterations,
        phase1_margin: None,
    }
}

/// Smallest eigenvalue of the PSD block evaluated at `z` (`+∞` if dim 0).
fn block_min_eig(program: &LmiProgram, z: &[f64]) -> f64 {
    let d = program.psd_dim();
    if d == 0 {
        return f64::INFINITY;
    }
    let block = program.psd_block_at(z);
    let dense = DMatrix::from_fn(d, d, |i, j| block.get(i, j));
    dense
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &v| a.min(v))
}

/// Checks the advertised optimality invariants directly on `z` (the slack
/// variables can satisfy KKT while the true block still dips below the
/// certificate tolerance when primal residuals linger).
fn direct_feasible(program: &LmiProgram, z: &[f64]) -> bool {
    if block_min_eig(program, z) < SDP_PSD_TOL {
        return false;
    }
    (0..program.num_rows()).all(|r| program.row_value(r, z) >= SDP_PSD_TOL)
}

/// Cholesky with a tiny jitter retry; `None` means genuinely not PD.
fn chol_pd(mat: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    if mat.nrows() == 0 {
        return Cholesky::new(DMatrix::zeros(0, 0));
    }
    Cholesky::new(mat.clone()).or_else(|| {
        let jitter = 1e-14 * (1.0 + mat.trace().abs());
        Cholesky::new(mat + DMatrix::identity(mat.nrows(), mat.nrows()) * jitter)
    })
}

/// Cholesky of the Schur matrix with escalating ridge regularization.
fn chol_ridge(mat: &DMatrix<f64>) -> Option<Cholesky<f64, Dyn>> {
    let scale = 1.0 + mat.trace().abs() / mat.nrows().max(1) as f64;
    for ridge in [0.0, 1e-13, 1e-10, 1e-7, 1e-4] {
        let candidate = if ridge == 0.0 {
            mat.clone()
        } else {
            mat + DMatrix::identity(mat.nrows(), mat.ncols()) * (ridge * scale)
        };
        if let Some(c) = Cholesky::new(candidate) {
            return Some(c);
        }
    }
    None
}

/// Largest α with `S + αΔ ⪰ 0` and `s + αδ ≥ 0` (∞-capped at 1e8).
fn max_step(
    chol: Option<&Cholesky<f64, Dyn>>,
    delta_mat: &DMatrix<f64>,
    s: &DVector<f64>,
    delta: &DVector<f64>,
) -> f64 {
    let mut alpha = 1e8f64;
    if let Some(c) = chol {
        if delta_mat.nrows() > 0 {
            let l = c.l();
            if let Some(x) = l.solve_lower_triangular(delta_mat) {
                if let Some(k) = l.solve_lower_triangular(&x.transpose()) {
                    let ksym = (&k + k.transpose()) * 0.5;
                    let lam = ksym
                        .symmetric_eigen()
                        .eigenvalues
                        .iter()
                        .fold(f64::INFINITY, |a, &v| a.min(v));
                    if lam < 0.0 {
                        alpha = alpha.min(-1.0 / lam);
                    }
                }
            }
        }
    }
    for r in 0..s.len() {
        if delta[r] < 0.0 {
            alpha = alpha.min(-s[r] / delta[r]);
        }
    }
    alpha
}
