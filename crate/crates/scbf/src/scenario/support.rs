//! Support-constraint counting by leave-one-out re-solves.
//!
//! A scenario constraint is a *support constraint* when deleting it (keeping
//! everything else) moves the optimizer. For a convex program a constraint
//! that is slack at the optimum can never be support — deleting it leaves
//! the old optimizer optimal for the relaxed problem — so only the active
//! scenario rows need a re-solve. The count feeds the posterior risk
//! interval, where a smaller count gives a tighter certificate.

use rayon::prelude::*;

use super::ScenarioError;
use crate::consts::{ACTIVE_CONSTRAINT_TOL, SUPPORT_DECISION_TOL};
use crate::sdp::{solve, LmiProgram, SdpSolution, SdpStatus};

/// Counts the scenario rows of `program` whose individual removal moves the
/// optimizer by more than [`SUPPORT_DECISION_TOL`] in Euclidean norm.
///
/// `scenario_rows` indexes into `program`'s affine rows and marks which of
/// them are scenario-generated (structural rows are never candidates).
/// `base` must be the optimal solution of `program` itself.
///
/// A leave-one-out re-solve that fails, or ends anywhere other than
/// optimality, counts its row as support: over-counting only widens the
/// risk interval, never invalidates it.
pub fn count_support_constraints(
    program: &LmiProgram,
    base: &SdpSolution,
    scenario_rows: &[usize],
) -> Result<usize, ScenarioError> {
    if base.status != SdpStatus::Optimal {
        return Err(ScenarioError::InvalidArgument(
            "support counting requires an optimal base solution".into(),
        ));
    }
    if base.z.len() != program.num_vars() {
        return Err(ScenarioError::InvalidArgument(format!(
            "base solution has {} variables, program has {}",
            base.z.len(),
            program.num_vars()
        )));
    }
    for &r in scenario_rows {
        if r >= program.num_rows() {
            return Err(ScenarioError::InvalidArgument(format!(
                "scenario row index {r} out of range ({} rows)",
                program.num_rows()
            )));
        }
    }

    let active: Vec<usize> = scenario_rows
        .iter()
        .copied()
        .filter(|&r| program.row_value(r, &base.z) <= ACTIVE_CONSTRAINT_TOL)
        .collect();

    // Each re-solve is independent; summing booleans makes the aggregate
    // order-independent, so the parallel count is deterministic.
    let count = active
        .par_iter()
        .map(|&r| {
            let reduced = program.without_row(r);
            match solve(&reduced) {
                Ok(sol) if sol.status == SdpStatus::Optimal => {
                    let delta: f64 = sol
                        .z
                        .iter()
                        .zip(base.z.iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    usize::from(delta > SUPPORT_DECISION_TOL)
                }
                _ => 1,
            }
        })
        .sum();
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SymMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// maximize z s.t. diag(1 − z, z) ⪰ 0 plus the given extra rows.
    fn interval_with_rows(rows: &[(Vec<f64>, f64)]) -> LmiProgram {
        let f0 = SymMatrix::from_fn(2, |i, j| if i == 0 && j == 0 { 1.0 } else { 0.0 });
        let f1 = SymMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 0) => -1.0,
            (1, 1) => 1.0,
            _ => 0.0,
        });
        let mut p = LmiProgram::new(vec![1.0], f0, vec![f1]).unwrap();
        for (a, b) in rows {
            p.add_row(a.clone(), *b).unwrap();
        }
        p
    }

    #[test]
    fn slack_scenarios_are_never_support() {
        // Optimum z* = 1 is set by the PSD block; the scenario rows z ≤ 2
        // and z ≤ 3 are strictly slack there.
        let p = interval_with_rows(&[(vec![-1.0], 2.0), (vec![-1.0], 3.0)]);
        let sol = solve(&p).unwrap();
        let c = count_support_constraints(&p, &sol, &[0, 1]).unwrap();
        assert_eq!(c, 0);
    }

    #[test]
    fn one_dimensional_minimum_is_the_unique_support() {
        // maximize d s.t. d ≤ v_i: the smallest v_i is the only support
        // constraint.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let mut p = LmiProgram::new(vec![1.0], SymMatrix::zeros(0), vec![SymMatrix::zeros(0)])
                .unwrap();
            let mut vs = Vec::new();
            for _ in 0..8 {
                let v: f64 = rng.gen_range(0.5..5.0);
                vs.push(v);
                p.add_row(vec![-1.0], v).unwrap();
            }
            let sol = solve(&p).unwrap();
            let vmin = vs.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!((sol.objective_value - vmin).abs() < 1e-6);
            let rows: Vec<usize> = (0..vs.len()).collect();
            assert_eq!(count_support_constraints(&p, &sol, &rows).unwrap(), 1);
        }
    }

    #[test]
    fn active_restriction_matches_exhaustive_leave_one_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..8 {
            // Random bounded 2-variable LP over a box with random cuts; the
            // box rows are structural, the cuts are scenarios.
            let mut p = LmiProgram::new(
                vec![rng.gen_range(0.2..1.0), rng.gen_range(0.2..1.0)],
                SymMatrix::zeros(0),
                vec![SymMatrix::zeros(0), SymMatrix::zeros(0)],
            )
            .unwrap();
            p.add_box(&[-2.0, -2.0], &[2.0, 2.0]).unwrap();
            let first_scenario = p.num_rows();
            let n_scen = rng.gen_range(3..9);
            for _ in 0..n_scen {
                let a = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                let b = rng.gen_range(0.5..2.0);
                p.add_row(a, b).unwrap();
            }
            let sol = solve(&p).unwrap();
            assert_eq!(sol.status, SdpStatus::Optimal);
            let rows: Vec<usize> = (first_scenario..p.num_rows()).collect();
            let fast = count_support_constraints(&p, &sol, &rows).unwrap();

            // Oracle straight from the definition: drop every scenario row
            // in turn, active or not, and watch the optimizer.
            let mut oracle = 0usize;
            for &r in &rows {
                let sub = solve(&p.without_row(r)).unwrap();
                let delta: f64 = sub
                    .z
                    .iter()
                    .zip(sol.z.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                if sub.status != SdpStatus::Optimal || delta > SUPPORT_DECISION_TOL {
                    oracle += 1;
                }
            }
            assert_eq!(fast, oracle);
        }
    }

    #[test]
    fn rejects_non_optimal_base_and_bad_indices() {
        let p = interval_with_rows(&[(vec![-1.0], 2.0)]);
        let sol = solve(&p).unwrap();
        assert!(count_support_constraints(&p, &sol, &[5]).is_err());
        let mut bad = sol.clone();
        bad.status = SdpStatus::MaxIter;
        assert!(count_support_constraints(&p, &bad, &[0]).is_err());
    }
}
