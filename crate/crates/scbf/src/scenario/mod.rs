//! Scenario-level machinery: i.i.d. sampling of the reachable ball,
//! support-constraint counting, and the risk bounds that convert an
//! empirical solve over `N̄` samples into a probability statement about all
//! unseen configurations.
//!
//! The central quantity is the violation probability `V(z)` of a decision
//! `z` — the measure of ball states whose scenario constraint `z` fails to
//! satisfy. [`posterior_risk`] brackets `V` from the observed number of
//! support constraints; [`required_samples`] inverts the a-priori form of
//! the same bound to size a batch before any data is seen.

mod risk;
mod sample;
mod support;

pub use risk::{posterior_risk, required_samples, scen_poly_roots, upper_risk};
pub use sample::{sample_ball, ScenarioBatch, ScenarioBatchError};
pub use support::count_support_constraints;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum ScenarioError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Root bracketing for the risk polynomial failed; the payload reports
    /// the sign pattern seen on the probe grid for post-mortems.
    #[error("risk polynomial root bracketing failed for n={n_bar}, k={k}, beta={beta}: {detail}")]
    Bracketing {
        n_bar: usize,
        k: usize,
        beta: f64,
        detail: String,
    },
    /// `required_samples` exhausted its sample budget. Carries the best
    /// bound achieved at `n_max` so callers can report how far off they are.
    #[error(
        "sample budget exhausted: risk bound {achieved:.4} at n_max={n_max} still above eps={eps}"
    )]
    BudgetExhausted {
        n_max: usize,
        eps: f64,
        achieved: f64,
    },
    #[error(transparent)]
    Numerics(#[from] crate::numerics::NumericsError),
}

/// Two-sided bound on the violation probability of a scenario solution,
/// valid with confidence `1 − beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskBound {
    /// Lower bound `ε̲` (0 when the interval reaches the origin).
    pub eps_lo: f64,
    /// Upper bound `ε̄`.
    pub eps_hi: f64,
    /// Complexity (support-constraint count) the bound was evaluated at.
    pub complexity: usize,
    /// Sample count the bound refers to.
    pub n_samples: usize,
    /// Confidence parameter: the bound fails with probability ≤ `beta`.
    pub beta: f64,
}
