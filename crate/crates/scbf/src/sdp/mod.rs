//! A small dense semidefinite-program solver: linear objective, one PSD
//! block plus affine inequality rows and optional box bounds.
//!
//! The solved form is
//!
//! ```text
//! maximize   c·z
//! such that  F₀ + Σᵢ zᵢ Fᵢ  ⪰ 0        (one dense symmetric block)
//!            aᵣ·z + bᵣ      ≥ 0        (scalar rows, incl. box bounds)
//! ```
//!
//! via an infeasible-start primal-dual interior-point method with
//! Mehrotra predictor-corrector steps (see [`ipm`] internals). The solver
//! targets desk-scale problems — block dimension ≤ 64, ≤ 128 variables —
//! and favors robustness over asymptotic speed: dense factorizations,
//! analytic-centering initialization, escalating ridge regularization on
//! the Newton system, and a phase-I feasibility certificate when the main
//! iteration cannot conclude.

mod ipm;

use std::io::{self, Write};

use thiserror::Error;

use crate::consts::{SDP_KKT_TOL, SDP_PSD_TOL};
use crate::numerics::SymMatrix;

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("program is malformed: {0}")]
    Invalid(String),
}

/// One linear-matrix-inequality program. Construct with [`LmiProgram::new`]
/// then extend with rows/bounds; all data is validated for shape and
/// finiteness at the point of entry so the solver can trust it.
#[derive(Debug, Clone)]
pub struct LmiProgram {
    num_vars: usize,
    objective: Vec<f64>,
    /// Constant term of the PSD block (dim may be 0 for pure LPs).
    f0: SymMatrix,
    /// Coefficient matrices, one per variable.
    fs: Vec<SymMatrix>,
    /// Affine inequality rows `(a, b)` meaning `a·z + b ≥ 0`.
    rows: Vec<(Vec<f64>, f64)>,
}

impl LmiProgram {
    /// A program with objective `maximize objective·z` and PSD constraint
    /// `f0 + Σ zᵢ fs[i] ⪰ 0`. Pass `SymMatrix::zeros(0)` blocks for a pure
    /// linear program.
    pub fn new(
        objective: Vec<f64>,
        f0: SymMatrix,
        fs: Vec<SymMatrix>,
    ) -> Result<Self, SdpError> {
        let num_vars = objective.len();
        if num_vars == 0 {
            return Err(SdpError::Invalid("at least one variable required".into()));
        }
        if fs.len() != num_vars {
            return Err(SdpError::Invalid(format!(
                "objective has {} variables but {} coefficient matrices were given",
                num_vars,
                fs.len()
            )));
        }
        if objective.iter().any(|v| !v.is_finite()) {
            return Err(SdpError::Invalid("objective must be finite".into()));
        }
        let dim = f0.dim();
        if fs.iter().any(|f| f.dim() != dim) {
            return Err(SdpError::Invalid(
                "all PSD coefficient matrices must share the dimension of f0".into(),
            ));
        }
        for (k, m) in std::iter::once(&f0).chain(fs.iter()).enumerate() {
            for i in 0..dim {
                for j in i..dim {
                    if !m.get(i, j).is_finite() {
                        return Err(SdpError::Invalid(format!(
                            "matrix {k} has a non-finite entry at ({i}, {j})"
                        )));
                    }
                }
            }
        }
        Ok(LmiProgram {
            num_vars,
            objective,
            f0,
            fs,
            rows: Vec::new(),
        })
    }

    /// Adds the scalar constraint `a·z + b ≥ 0`.
    pub fn add_row(&mut self, a: Vec<f64>, b: f64) -> Result<(), SdpError> {
        if a.len() != self.num_vars {
            return Err(SdpError::Invalid(format!(
                "row has {} coefficients, program has {} variables",
                a.len(),
                self.num_vars
            )));
        }
        if a.iter().any(|v| !v.is_finite()) || !b.is_finite() {
            return Err(SdpError::Invalid("row data must be finite".into()));
        }
        self.rows.push((a, b));
        Ok(())
    }

    /// Adds box bounds `lo ≤ z ≤ hi` as scalar rows. Either side may be
    /// skipped per-variable with `±∞`.
    pub fn add_box(&mut self, lo: &[f64], hi: &[f64]) -> Result<(), SdpError> {
        if lo.len() != self.num_vars || hi.len() != self.num_vars {
            return Err(SdpError::Invalid(
                "bound vectors must match the variable count".into(),
            ));
        }
        for i in 0..self.num_vars {
            if lo[i] > hi[i] {
                return Err(SdpError::Invalid(format!(
                    "empty bound interval on variable {i}: [{}, {}]",
                    lo[i], hi[i]
                )));
            }
            let mut e = vec![0.0; self.num_vars];
            if lo[i].is_finite() {
                e[i] = 1.0;
                self.add_row(e.clone(), -lo[i])?;
                e[i] = 0.0;
            }
            if hi[i].is_finite() {
                e[i] = -1.0;
                self.add_row(e.clone(), hi[i])?;
            }
        }
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn psd_dim(&self) -> usize {
        self.f0.dim()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn rows(&self) -> &[(Vec<f64>, f64)] {
        &self.rows
    }

    pub(crate) fn f0(&self) -> &SymMatrix {
        &self.f0
    }

    pub(crate) fn fs(&self) -> &[SymMatrix] {
        &self.fs
    }

    /// The PSD block evaluated at `z`.
    pub fn psd_block_at(&self, z: &[f64]) -> SymMatrix {
        let mut s = self.f0.clone();
        for (zi, fi) in z.iter().zip(&self.fs) {
            s.add_scaled(fi, *zi);
        }
        s
    }

    /// Value of scalar row `r` at `z`.
    pub fn row_value(&self, r: usize, z: &[f64]) -> f64 {
        let (a, b) = &self.rows[r];
        a.iter().zip(z).map(|(ai, zi)| ai * zi).sum::<f64>() + b
    }

    /// A copy of the program with scalar row `r` deleted (leave-one-out
    /// support probing).
    pub fn without_row(&self, r: usize) -> LmiProgram {
        let mut p = self.clone();
        if r < p.rows.len() {
            p.rows.remove(r);
        }
        p
    }

    /// Writes a plain-text rendering of the full program for offline
    /// cross-checking against other solvers.
    pub fn dump<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "lmi-program")?;
        writeln!(w, "vars {}", self.num_vars)?;
        writeln!(w, "psd-dim {}", self.psd_dim())?;
        writeln!(w, "rows {}", self.rows.len())?;
        write!(w, "maximize")?;
        for c in &self.objective {
            write!(w, " {c:.17e}")?;
        }
        writeln!(w)?;
        let dump_matrix = |w: &mut W, name: &str, m: &SymMatrix| -> io::Result<()> {
            writeln!(w, "matrix {name}")?;
            for i in 0..m.dim() {
                for j in 0..m.dim() {
                    if j > 0 {
                        write!(w, " ")?;
                    }
                    write!(w, "{:.17e}", m.get(i, j))?;
                }
                writeln!(w)?;
            }
            Ok(())
        };
        dump_matrix(w, "F0", &self.f0)?;
        for (i, f) in self.fs.iter().enumerate() {
            dump_matrix(w, &format!("F{}", i + 1), f)?;
        }
        for (a, b) in &self.rows {
            write!(w, "row")?;
            for ai in a {
                write!(w, " {ai:.17e}")?;
            }
            writeln!(w, " | {b:.17e}")?;
        }
        Ok(())
    }
}

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    /// KKT residual at or below [`SDP_KKT_TOL`].
    Optimal,
    /// A phase-I solve certified that no feasible point exists (its
    /// optimal margin is strictly negative).
    Infeasible,
    /// Iteration budget exhausted (or numerics broke down) without either
    /// verdict; the best iterate is returned.
    MaxIter,
}

/// Solver output. `z` is meaningful for `Optimal` (and best-effort for
/// `MaxIter`); for `Infeasible` it carries the last iterate of the failed
/// main solve.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub z: Vec<f64>,
    pub status: SdpStatus,
    /// Worst of the three scaled KKT residuals at the final iterate.
    pub kkt_residual: f64,
    pub objective_value: f64,
    /// Smallest eigenvalue of the PSD block at `z` (`+∞` for dim 0).
    pub psd_min_eig: f64,
    pub iterations: usize,
    /// Phase-I optimal margin when one ran (negative ⟹ infeasible).
    pub phase1_margin: Option<f64>,
}

impl SdpSolution {
    /// True when the iterate satisfies the advertised optimality contract:
    /// PSD block eigenvalues ≥ −1e-7, every row ≥ −1e-7, KKT ≤ 1e-6.
    pub fn certifies_feasibility(&self, program: &LmiProgram) -> bool {
        if self.psd_min_eig < SDP_PSD_TOL {
            return false;
        }
        if (0..program.num_rows()).any(|r| program.row_value(r, &self.z) < SDP_PSD_TOL) {
            return false;
        }
        self.kkt_residual <= SDP_KKT_TOL
    }
}

/// Solves the program. Never panics on valid input; numerical failure
/// degrades to `MaxIter` status with the best iterate found.
pub fn solve(program: &LmiProgram) -> Result<SdpSolution, SdpError> {
    ipm::solve_with_phase1(program)
}
