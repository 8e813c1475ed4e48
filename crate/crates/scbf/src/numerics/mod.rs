//! Self-contained numerical kernels: no BLAS/LAPACK, no special-function
//! crates. Everything here is small and dense by design — the matrices this
//! crate ever decomposes are at most a few dozen rows.

mod special;
mod sym;

pub use special::{
    inv_reg_inc_beta, ln_gamma, log_binomial, log_sum_exp, log_sum_exp2, reg_inc_beta,
};
pub use sym::{sym_eigen, EigenDecomposition, SymMatrix};

use thiserror::Error;

/// Errors surfaced by the numerics layer. All of them are programming or
/// data errors — nothing here is transient.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum NumericsError {
    /// An argument was outside the mathematical domain of the function.
    #[error("domain error: {0}")]
    Domain(String),
    /// An input matrix or scalar contained NaN/inf.
    #[error("non-finite input in {0}")]
    NonFinite(&'static str),
    /// An iteration failed to meet its tolerance within the cap. The payload
    /// names the routine and the cap so callers can report it verbatim.
    #[error("{routine} did not converge within {iterations} iterations")]
    NoConvergence {
        routine: &'static str,
        iterations: usize,
    },
}
