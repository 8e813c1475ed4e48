//! Dense symmetric matrices in packed (upper-triangle) storage and a cyclic
//! Jacobi eigensolver.
//!
//! Jacobi is quadratic-ish in flops compared to tridiagonalization but it is
//! simple, branch-predictable, and delivers small backward error together
//! with eigenvectors — exactly what the SDP line searches and the barrier
//! containment checks need at dimensions ≤ 64.

use serde::{Deserialize, Serialize};

use super::NumericsError;

/// Symmetric `dim × dim` matrix, packed row-major upper triangle.
///
/// Entry `(i, j)` with `i ≤ j` lives at `i*dim − i(i−1)/2 + (j − i)`.
/// Storage is `dim(dim+1)/2` doubles; reads of `(j, i)` mirror to `(i, j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Zero matrix of the given dimension. `dim = 0` yields the empty
    /// matrix, which is how a program without a semidefinite block spells
    /// its block data.
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    /// `s · I`.
    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, s);
        }
        m
    }

    /// Builds from a callback over the upper triangle (`i ≤ j`).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds from a dense row-major `dim × dim` slice, symmetrizing as
    /// `(A + Aᵀ)/2`.
    pub fn from_dense(dim: usize, a: &[f64]) -> Self {
        assert_eq!(a.len(), dim * dim, "dense buffer has wrong length");
        Self::from_fn(dim, |i, j| 0.5 * (a[i * dim + j] + a[j * dim + i]))
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < self.dim);
        // Row i of the packed upper triangle starts after rows 0..i, which
        // hold dim, dim−1, …, dim−i+1 entries.
        i * (2 * self.dim - i + 1) / 2 + (j - i)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.data[self.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    /// `self += s · other` (dimensions must match).
    pub fn add_scaled(&mut self, other: &SymMatrix, s: f64) {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += s * b;
        }
    }

    /// Scales every entry in place.
    pub fn scale(&mut self, s: f64) {
        for a in self.data.iter_mut() {
            *a *= s;
        }
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.data[self.idx(i, j)];
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
        out
    }

    /// Matrix-vector product `A·x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim, "vector length mismatch");
        let n = self.dim;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.get(i, j) * x[j];
            }
            y[i] = acc;
        }
        y
    }

    /// Quadratic form `xᵀ·A·x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "vector length mismatch");
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.get(i, i) * x[i] * x[i];
            for j in (i + 1)..n {
                acc += 2.0 * self.get(i, j) * x[i] * x[j];
            }
        }
        acc
    }

    /// Frobenius inner product `⟨A, B⟩ = tr(AᵀB)`.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            acc += self.get(i, i) * other.get(i, i);
            for j in (i + 1)..n {
                acc += 2.0 * self.get(i, j) * other.get(i, j);
            }
        }
        acc
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.dot(self).max(0.0).sqrt()
    }

    /// Largest singular value = max |eigenvalue| (via [`sym_eigen`]).
    pub fn spectral_norm(&self) -> Result<f64, NumericsError> {
        let eig = sym_eigen(self)?;
        Ok(eig
            .eigenvalues
            .iter()
            .fold(0.0_f64, |m, &l| m.max(l.abs())))
    }

    fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Eigendecomposition `A = V Λ Vᵀ` of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Eigenvalues in ascending order.
    pub eigenvalues: Vec<f64>,
    /// Column-major orthonormal eigenvectors; column `k` (entries
    /// `vectors[k*dim..(k+1)*dim]`) pairs with `eigenvalues[k]`.
    pub vectors: Vec<f64>,
    pub dim: usize,
}

impl EigenDecomposition {
    /// Eigenvector `k` as a slice.
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.dim..(k + 1) * self.dim]
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Largest eigenvalue.
    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }
}

/// Full eigendecomposition by cyclic Jacobi rotations.
///
/// Terminates when the off-diagonal Frobenius mass falls below
/// `1e-14 · ‖A‖_F` (well inside [`EIGEN_RECONSTRUCTION_TOL`]) or errors out
/// after a fixed sweep budget — which for dimensions ≤ 64 is never reached
/// in practice. Fails fast on non-finite input.
pub fn sym_eigen(a: &SymMatrix) -> Result<EigenDecomposition, NumericsError> {
    if !a.is_finite() {
        return Err(NumericsError::NonFinite("sym_eigen"));
    }
    let n = a.dim;
    let mut m = a.to_dense();
    // V accumulates rotations; starts as identity.
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let norm = a.frobenius_norm();
    let off_tol = 1e-14 * norm.max(f64::MIN_POSITIVE);
    const MAX_SWEEPS: usize = 64;

    let off = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * m[i * n + j] * m[i * n + j];
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&m) > off_tol {
        if sweeps >= MAX_SWEEPS {
            return Err(NumericsError::NoConvergence {
                routine: "sym_eigen",
                iterations: MAX_SWEEPS,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= off_tol / (n as f64) {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                // Stable choice of the smaller rotation angle.
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    // Extract, sort ascending, and reorder the vector columns to match.
    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    order.sort_by(|&i, &j| diag[i].partial_cmp(&diag[j]).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vectors[new_col * n + row] = v[row * n + old_col];
        }
    }

    Ok(EigenDecomposition {
        eigenvalues,
        vectors,
        dim: n,
    })
}

/// Debug helper used by tests: `‖V Λ Vᵀ − A‖_F`.
#[cfg(test)]
pub(crate) fn reconstruction_error(a: &SymMatrix, e: &EigenDecomposition) -> f64 {
    let n = a.dim();
    let mut err = 0.0;
    for i in 0..n {
        for j in i..n {
            let mut rec = 0.0;
            for k in 0..n {
                rec += e.eigenvalues[k] * e.vectors[k * n + i] * e.vectors[k * n + j];
            }
            let d = rec - a.get(i, j);
            let w = if i == j { 1.0 } else { 2.0 };
            err += w * d * d;
        }
    }
    err.sqrt()
}

// ───────────────────────────── Tests ─────────────────────────────
