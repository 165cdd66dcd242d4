use std::fmt;

use crate::fault::FaultTotals;

/// How a solve ended. Exactly one outcome per run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// True relative residual is within tolerance.
    Converged,
    /// `H(j+1, j)` vanished with a nonsingular leading block, but the
    /// verified residual is still above tolerance.
    InvariantSubspace,
    /// `H(j+1, j)` vanished with a singular leading block.
    RankDeficient,
    MaxIterations,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Converged => "converged",
            Outcome::InvariantSubspace => "invariant-subspace",
            Outcome::RankDeficient => "rank-deficient",
            Outcome::MaxIterations => "max-iterations",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryEntry {
    pub iteration: usize,
    /// Recurrence residual divided by `‖b‖₂`.
    pub residual: f64,
    /// Cumulative inner iterations (equals `iteration` for plain GMRES).
    pub inner_iters: usize,
    /// Cumulative fault counters at this point.
    pub faults: FaultTotals,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub outcome: Outcome,
    pub x: Vec<f64>,
    pub history: Vec<HistoryEntry>,
    pub iters: usize,
    pub inner_iters: usize,
    /// `‖b - A x‖₂ / ‖b‖₂` against the uncorrupted matrix.
    pub true_residual: f64,
    pub faults: FaultTotals,
    /// Rank-deficiency recoveries attempted.
    pub recoveries: usize,
    /// The first inner solve was replaced by the identity.
    pub guard_fallback: bool,
}

impl SolveReport {
    pub fn residuals(&self) -> Vec<f64> {
        self.history.iter().map(|h| h.residual).collect()
    }

    pub fn final_residual(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |h| h.residual)
    }
}
