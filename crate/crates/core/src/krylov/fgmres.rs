use super::gmres::check_system;
use super::{FlexibleArnoldi, HistoryEntry, Outcome, OuterOptions, SolveReport};
use crate::error::{Error, Result};
use crate::fault::FaultTotals;
use crate::sparse::CsrMatrix;

/// Flexible GMRES: iteration `j` (1-based) uses `z_j = inner_apply(j, q_j)`,
/// an arbitrary and possibly different preconditioner each time.
///
/// When `H(j+1, j)` vanishes the leading Hessenberg block is rank-checked:
/// a nonsingular block means an invariant subspace was found (the iterate
/// including column `j` is returned); a singular one is reported as
/// [`Outcome::RankDeficient`] with the last good iterate `x_{j-1}`.
pub fn fgmres<F>(
    a: &CsrMatrix,
    mut inner_apply: F,
    b: &[f64],
    x0: Option<&[f64]>,
    max_outer: usize,
    tol: f64,
) -> Result<SolveReport>
where
    F: FnMut(usize, &[f64]) -> Vec<f64>,
{
    check_system(a, b, x0)?;
    let mut outer = FlexibleArnoldi::new(a, b, x0, OuterOptions::default());
    let entry = |outer: &FlexibleArnoldi| HistoryEntry {
        iteration: outer.iterations(),
        residual: outer.relative_residual(),
        inner_iters: 0,
        faults: FaultTotals::default(),
    };
    let mut history = vec![entry(&outer)];
    let finish = |outer: &FlexibleArnoldi, outcome, x: Vec<f64>, history| {
        let true_residual = a.residual_norm(b, &x) / outer.denominator();
        SolveReport {
            outcome,
            x,
            history,
            iters: outer.iterations(),
            inner_iters: 0,
            true_residual,
            faults: FaultTotals::default(),
            recoveries: 0,
            guard_fallback: false,
        }
    };

    if outer.relative_residual() <= tol {
        let x = outer.solution();
        return Ok(finish(&outer, Outcome::Converged, x, history));
    }

    for j in 1..=max_outer {
        let z = inner_apply(j, outer.current_q());
        if z.len() != outer.dim() {
            return Err(Error::DimensionMismatch {
                op: "fgmres inner operator",
                expected: outer.dim(),
                actual: z.len(),
            });
        }
        let c = outer.candidate(a, &z);
        if !c.is_finite() {
            return Err(Error::invalid(format!(
                "inner operator produced a non-finite direction at iteration {j}"
            )));
        }
        if outer.is_breakdown(&c) {
            if !outer.rank_with(&c).full_rank {
                let x = outer.solution();
                return Ok(finish(&outer, Outcome::RankDeficient, x, history));
            }
            outer.commit(z, c, true);
            history.push(entry(&outer));
            let x = outer.solution();
            let verified = a.residual_norm(b, &x) / outer.denominator() <= tol;
            let outcome = if verified {
                Outcome::Converged
            } else {
                Outcome::InvariantSubspace
            };
            return Ok(finish(&outer, outcome, x, history));
        }
        outer.commit(z, c, false);
        history.push(entry(&outer));
        if outer.relative_residual() <= tol {
            let x = outer.solution();
            if a.residual_norm(b, &x) / outer.denominator() <= tol {
                return Ok(finish(&outer, Outcome::Converged, x, history));
            }
        }
    }
    let x = outer.solution();
    Ok(finish(&outer, Outcome::MaxIterations, x, history))
}
