use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{FtConfig, Recovery};
use super::recovery::{estimate_inverse_norm, recover, RecoveryAction};
use super::sandbox::{InnerOutput, SandboxAudit, SandboxSession};
use super::scrub::prepare_direction;
use crate::error::Result;
use crate::fault::{FaultLog, FaultPolicy, FaultTotals};
use crate::krylov::check_system;
use crate::krylov::{Candidate, FlexibleArnoldi, HistoryEntry, Outcome, OuterOptions, SolveReport};
use crate::precond::Preconditioner;
use crate::sparse::CsrMatrix;

/// Anything that can stand in for the unreliable inner solve.
pub trait InnerSolver {
    /// Approximates `A⁻¹ q` at 1-based outer iteration `j` within `budget`
    /// inner iterations.
    fn solve(&mut self, j: usize, q: &[f64], budget: usize) -> InnerOutput;

    /// Cumulative fault counters.
    fn totals(&self) -> FaultTotals {
        FaultTotals::default()
    }
}

impl InnerSolver for SandboxSession {
    fn solve(&mut self, _j: usize, q: &[f64], budget: usize) -> InnerOutput {
        self.inner_solve(q, budget)
    }

    fn totals(&self) -> FaultTotals {
        SandboxSession::totals(self)
    }
}

impl<F: FnMut(usize, &[f64], usize) -> Vec<f64>> InnerSolver for F {
    fn solve(&mut self, j: usize, q: &[f64], budget: usize) -> InnerOutput {
        InnerOutput {
            z: self(j, q, budget),
            iters: budget,
            repaired: 0,
        }
    }
}

/// How the first inner solve was accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GuardVerdict {
    Accepted,
    /// The first attempt did not reduce the residual; the retry did.
    Retried,
    /// Neither attempt reduced the residual; `z₁ = q₁`.
    Identity,
}

fn reduces_residual(outer: &FlexibleArnoldi, c: &Candidate) -> bool {
    outer.candidate_residual(c) < outer.beta() * (1.0 - 1e-12)
}

/// Accepts `z₁` only if it lowers the outer least-squares residual below
/// `β`; otherwise calls `solve` once more and finally falls back to `q₁`.
pub fn first_inner_solve_guard<F>(
    outer: &FlexibleArnoldi,
    a: &CsrMatrix,
    z: Vec<f64>,
    mut solve: F,
) -> (Vec<f64>, Candidate, GuardVerdict)
where
    F: FnMut() -> Vec<f64>,
{
    let c = outer.candidate(a, &z);
    if reduces_residual(outer, &c) {
        return (z, c, GuardVerdict::Accepted);
    }
    let z = solve();
    let c = outer.candidate(a, &z);
    if reduces_residual(outer, &c) {
        return (z, c, GuardVerdict::Retried);
    }
    let q = outer.current_q().to_vec();
    let c = outer.candidate(a, &q);
    (q, c, GuardVerdict::Identity)
}

/// Everything a fault-tolerant solve produced.
#[derive(Debug, Clone)]
pub struct FtGmres {
    pub report: SolveReport,
    /// Sandbox state after the solve.
    pub audit: SandboxAudit,
    pub log: FaultLog,
}

/// FT-GMRES on `A x = b`: inner solves use `m` inside a sandbox governed by
/// `policy`, the outer iteration uses `a` directly and is never faulted.
pub fn ft_gmres(
    a: &CsrMatrix,
    m: &Preconditioner,
    b: &[f64],
    x0: Option<&[f64]>,
    cfg: &FtConfig,
    policy: &FaultPolicy,
) -> Result<FtGmres> {
    check_system(a, b, x0)?;
    let mut session = SandboxSession::new(a, m, policy.clone(), cfg)?;
    let report = ft_gmres_with(a, &mut session, b, x0, cfg)?;
    Ok(FtGmres {
        report,
        audit: session.audit(),
        log: session.log().clone(),
    })
}

/// FT-GMRES with a caller-supplied inner solver.
///
/// Every inner result is scrubbed and, if huge, rescaled before the outer
/// iteration sees it, so the outer residual never increases. Convergence is
/// only reported after checking `‖b - A x‖₂` with `a`.
pub fn ft_gmres_with<I: InnerSolver + ?Sized>(
    a: &CsrMatrix,
    inner: &mut I,
    b: &[f64],
    x0: Option<&[f64]>,
    cfg: &FtConfig,
) -> Result<SolveReport> {
    check_system(a, b, x0)?;
    cfg.validate()?;
    let n = a.nrows();
    let mut outer = FlexibleArnoldi::new(a, b, x0, OuterOptions::default());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut inverse_norm: Option<Option<f64>> = None;
    let mut track = Tracker {
        history: vec![HistoryEntry {
            iteration: 0,
            residual: outer.relative_residual(),
            inner_iters: 0,
            faults: inner.totals(),
        }],
        inner_iters: 0,
        recoveries: 0,
        guard_fallback: false,
    };
    let denom = outer.denominator();
    let verified = |x: &[f64]| a.residual_norm(b, x) / denom <= cfg.outer_tol;

    if outer.relative_residual() <= cfg.outer_tol {
        let x = outer.solution();
        if verified(&x) {
            return Ok(track.finish(Outcome::Converged, x, &outer, a, b, inner.totals()));
        }
    }

    let call_inner = |inner: &mut I, j: usize, q: &[f64], budget: usize, iters: &mut usize| {
        let mut out = inner.solve(j, q, budget);
        *iters += out.iters;
        if out.z.len() != n {
            log::warn!(
                "inner solve returned {} entries, expected {n}; using q",
                out.z.len()
            );
            out.z = q.to_vec();
        }
        prepare_direction(&mut out.z, cfg.repair_window);
        out.z
    };

    for j in 1..=cfg.t {
        let budget = cfg.inner_budget(j);
        let q = outer.current_q().to_vec();
        let z = call_inner(inner, j, &q, budget, &mut track.inner_iters);
        let (mut z, mut c) = if j == 1 && cfg.first_solve_guard {
            let iters = &mut track.inner_iters;
            let (z, c, verdict) =
                first_inner_solve_guard(&outer, a, z, || call_inner(inner, j, &q, budget, iters));
            if verdict == GuardVerdict::Identity {
                log::info!("first inner solve replaced by the identity");
                track.guard_fallback = true;
            }
            (z, c)
        } else {
            let c = outer.candidate(a, &z);
            (z, c)
        };

        let mut attempt = 0;
        while !c.is_finite() || outer.is_breakdown(&c) {
            if c.is_finite() && outer.rank_with(&c).full_rank {
                outer.commit(z, c, true);
                track.record(&outer, inner.totals());
                let x = outer.solution();
                let outcome = if verified(&x) {
                    Outcome::Converged
                } else {
                    Outcome::InvariantSubspace
                };
                return Ok(track.finish(outcome, x, &outer, a, b, inner.totals()));
            }
            attempt += 1;
            let estimate = match (cfg.recovery, inverse_norm) {
                (Recovery::RandomZ, None) => *inverse_norm.insert(estimate_inverse_norm(a)),
                (_, cached) => cached.flatten(),
            };
            match recover(
                cfg.recovery,
                attempt,
                cfg.max_retries,
                n,
                estimate,
                &mut rng,
            ) {
                RecoveryAction::ReturnLastGood => {
                    log::info!("rank-deficient outer step {j}; returning previous iterate");
                    let x = outer.solution();
                    return Ok(track.finish(
                        Outcome::RankDeficient,
                        x,
                        &outer,
                        a,
                        b,
                        inner.totals(),
                    ));
                }
                RecoveryAction::Retry => {
                    track.recoveries += 1;
                    z = call_inner(inner, j, &q, budget, &mut track.inner_iters);
                }
                RecoveryAction::Replace(v) => {
                    track.recoveries += 1;
                    z = v;
                }
            }
            c = outer.candidate(a, &z);
        }

        outer.commit(z, c, false);
        track.record(&outer, inner.totals());
        if outer.relative_residual() <= cfg.outer_tol {
            let x = outer.solution();
            if verified(&x) {
                return Ok(track.finish(Outcome::Converged, x, &outer, a, b, inner.totals()));
            }
            log::debug!(
                "recurrence residual below tolerance at outer {j} but true residual is not"
            );
        }
    }
    let x = outer.solution();
    Ok(track.finish(Outcome::MaxIterations, x, &outer, a, b, inner.totals()))
}

struct Tracker {
    history: Vec<HistoryEntry>,
    inner_iters: usize,
    recoveries: usize,
    guard_fallback: bool,
}

impl Tracker {
    fn record(&mut self, outer: &FlexibleArnoldi, faults: FaultTotals) {
        self.history.push(HistoryEntry {
            iteration: outer.iterations(),
            residual: outer.relative_residual(),
            inner_iters: self.inner_iters,
            faults,
        });
    }

    fn finish(
        self,
        outcome: Outcome,
        x: Vec<f64>,
        outer: &FlexibleArnoldi,
        a: &CsrMatrix,
        b: &[f64],
        faults: FaultTotals,
    ) -> SolveReport {
        SolveReport {
            true_residual: a.residual_norm(b, &x) / outer.denominator(),
            outcome,
            x,
            history: self.history,
            iters: outer.iterations(),
            inner_iters: self.inner_iters,
            faults,
            recoveries: self.recoveries,
            guard_fallback: self.guard_fallback,
        }
    }
}
