//! Right-preconditioned GMRES with modified Gram-Schmidt Arnoldi.

use super::{Hessenberg, HistoryEntry, Outcome, SolveReport, DEFAULT_BREAKDOWN_TOL};
use crate::error::{Error, Result};
use crate::fault::FaultTotals;
use crate::precond::Preconditioner;
use crate::sparse::vector::{axpy, dot, norm2};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    MatVec,
    Precondition,
}

/// Operators and hooks seen by one GMRES run.
///
/// The hooks are where an unreliable environment injects faults: they see
/// the output of every operator application and the current Krylov basis.
pub trait KrylovContext {
    fn dim(&self) -> usize;

    fn matvec(&mut self, x: &[f64], y: &mut [f64]);

    fn precondition(&mut self, q: &[f64], z: &mut [f64]);

    /// Called after every operator application.
    fn injection_point(&mut self, _op: OpKind, _out: &mut [f64], _basis: &mut [Vec<f64>]) {}

    /// Called after a basis vector is appended; `basis.len()` is the new size.
    fn basis_extended(&mut self, _basis: &mut [Vec<f64>]) {}

    /// Called once per completed Arnoldi step, after its residual is known.
    fn iteration_done(&mut self, _iteration: usize) {}

    /// `‖b - A x‖₂` for convergence verification. Not an injection point.
    fn residual_norm(&mut self, b: &[f64], x: &[f64]) -> f64 {
        let mut ax = vec![0.0; b.len()];
        self.matvec(x, &mut ax);
        ax.iter()
            .zip(b)
            .map(|(a, bi)| (bi - a) * (bi - a))
            .sum::<f64>()
            .sqrt()
    }
}

/// Fault-free context over a matrix and preconditioner.
pub struct Reliable<'a> {
    a: &'a CsrMatrix,
    m: &'a Preconditioner,
}

impl<'a> Reliable<'a> {
    pub fn new(a: &'a CsrMatrix, m: &'a Preconditioner) -> Self {
        Self { a, m }
    }
}

impl KrylovContext for Reliable<'_> {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn matvec(&mut self, x: &[f64], y: &mut [f64]) {
        self.a.spmv_into(x, y);
    }

    fn precondition(&mut self, q: &[f64], z: &mut [f64]) {
        self.m.apply_into(q, z);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    pub max_iters: usize,
    /// Relative residual target; `None` runs the full iteration budget.
    pub tol: Option<f64>,
    /// `H(j+1, j) < breakdown_tol · ‖b‖₂` counts as breakdown.
    pub breakdown_tol: f64,
}

impl GmresOptions {
    pub fn fixed(max_iters: usize) -> Self {
        Self {
            max_iters,
            tol: None,
            breakdown_tol: DEFAULT_BREAKDOWN_TOL,
        }
    }

    pub fn with_tol(max_iters: usize, tol: f64) -> Self {
        Self {
            tol: Some(tol),
            ..Self::fixed(max_iters)
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmresRun {
    pub x: Vec<f64>,
    pub outcome: Outcome,
    /// `(iteration, recurrence residual / ‖b‖₂)`, starting at iteration 0.
    pub history: Vec<(usize, f64)>,
    pub iters: usize,
    /// Stopped because an Arnoldi quantity became NaN or infinite.
    pub nonfinite_stop: bool,
}

/// Runs right-preconditioned GMRES through `ctx`.
///
/// `x0 = None` starts from zero without an initial matrix-vector product.
/// The solution update `x = x0 + M⁻¹ (Q y)` is formed once, at exit.
pub fn gmres_with_context<C: KrylovContext + ?Sized>(
    ctx: &mut C,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: GmresOptions,
) -> GmresRun {
    let n = ctx.dim();
    assert_eq!(b.len(), n, "gmres: rhs length mismatch");
    let b_norm = norm2(b);
    let start = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);

    let mut r = match x0 {
        Some(x0) => {
            assert_eq!(x0.len(), n, "gmres: x0 length mismatch");
            let mut ax = vec![0.0; n];
            ctx.matvec(x0, &mut ax);
            ctx.injection_point(OpKind::MatVec, &mut ax, &mut []);
            b.iter().zip(&ax).map(|(bi, a)| bi - a).collect()
        }
        None => b.to_vec(),
    };
    let beta = norm2(&r);
    let denom = if b_norm > 0.0 { b_norm } else { 1.0 };
    let mut history = vec![(0, beta / denom)];

    let done = |outcome, nonfinite_stop, history| GmresRun {
        x: start.clone(),
        outcome,
        history,
        iters: 0,
        nonfinite_stop,
    };
    if !beta.is_finite() {
        return done(Outcome::MaxIterations, true, history);
    }
    if beta == 0.0 || opts.tol.is_some_and(|t| beta <= t * b_norm) {
        return done(Outcome::Converged, false, history);
    }

    let breakdown_tol = opts.breakdown_tol * b_norm;
    r.iter_mut().for_each(|v| *v /= beta);
    let mut basis = vec![r];
    ctx.basis_extended(&mut basis);
    let mut hess = Hessenberg::with_capacity(beta, opts.max_iters);
    let mut z = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut outcome = Outcome::MaxIterations;
    let mut nonfinite_stop = false;

    let assemble = |ctx: &mut C, hess: &Hessenberg, basis: &mut [Vec<f64>]| -> Vec<f64> {
        let y = hess.solve();
        let mut w = vec![0.0; n];
        for (qi, yi) in basis.iter().zip(&y) {
            axpy(*yi, qi, &mut w);
        }
        let mut dz = vec![0.0; n];
        ctx.precondition(&w, &mut dz);
        ctx.injection_point(OpKind::Precondition, &mut dz, basis);
        let mut x = start.clone();
        axpy(1.0, &dz, &mut x);
        x
    };

    while hess.cols() < opts.max_iters {
        let j = hess.cols();
        ctx.precondition(&basis[j], &mut z);
        ctx.injection_point(OpKind::Precondition, &mut z, &mut basis);
        ctx.matvec(&z, &mut v);
        ctx.injection_point(OpKind::MatVec, &mut v, &mut basis);

        let mut h = vec![0.0; j + 2];
        for (i, qi) in basis.iter().enumerate() {
            h[i] = dot(qi, &v);
            axpy(-h[i], qi, &mut v);
        }
        h[j + 1] = norm2(&v);
        if !h.iter().all(|x| x.is_finite()) {
            nonfinite_stop = true;
            break;
        }
        hess.push_column(&h);
        let resid = hess.residual();
        history.push((j + 1, resid / denom));
        ctx.iteration_done(j + 1);

        if h[j + 1] <= breakdown_tol || j + 1 == n {
            // happy breakdown: the Krylov space is invariant under A M⁻¹
            let x = assemble(ctx, &hess, &mut basis);
            outcome = match opts.tol {
                Some(t) if ctx.residual_norm(b, &x) > t * b_norm => Outcome::InvariantSubspace,
                _ => Outcome::Converged,
            };
            return GmresRun {
                x,
                outcome,
                history,
                iters: hess.cols(),
                nonfinite_stop,
            };
        }

        if let Some(t) = opts.tol {
            if resid <= t * b_norm {
                let x = assemble(ctx, &hess, &mut basis);
                if ctx.residual_norm(b, &x) <= t * b_norm {
                    return GmresRun {
                        x,
                        outcome: Outcome::Converged,
                        history,
                        iters: hess.cols(),
                        nonfinite_stop,
                    };
                }
            }
        }

        let inv = 1.0 / h[j + 1];
        let next: Vec<f64> = v.iter().map(|x| x * inv).collect();
        basis.push(next);
        ctx.basis_extended(&mut basis);
    }

    let x = if hess.cols() == 0 {
        start.clone()
    } else {
        assemble(ctx, &hess, &mut basis)
    };
    if nonfinite_stop {
        outcome = Outcome::MaxIterations;
    }
    GmresRun {
        x,
        outcome,
        history,
        iters: hess.cols(),
        nonfinite_stop,
    }
}

/// Fault-free right-preconditioned GMRES on `A x = b`.
pub fn gmres(
    a: &CsrMatrix,
    m: &Preconditioner,
    b: &[f64],
    x0: Option<&[f64]>,
    max_iters: usize,
    tol: f64,
) -> Result<SolveReport> {
    check_system(a, b, x0)?;
    if m.dim() != a.nrows() {
        return Err(Error::DimensionMismatch {
            op: "gmres preconditioner",
            expected: a.nrows(),
            actual: m.dim(),
        });
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::invalid(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let run = gmres_with_context(
        &mut Reliable::new(a, m),
        b,
        x0,
        GmresOptions::with_tol(max_iters, tol),
    );
    let b_norm = norm2(b);
    let true_residual = a.residual_norm(b, &run.x) / if b_norm > 0.0 { b_norm } else { 1.0 };
    Ok(SolveReport {
        outcome: run.outcome,
        history: run
            .history
            .iter()
            .map(|&(iteration, residual)| HistoryEntry {
                iteration,
                residual,
                inner_iters: iteration,
                faults: FaultTotals::default(),
            })
            .collect(),
        iters: run.iters,
        inner_iters: run.iters,
        x: run.x,
        true_residual,
        faults: FaultTotals::default(),
        recoveries: 0,
        guard_fallback: false,
    })
}

pub(crate) fn check_system(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::invalid(format!(
            "matrix must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            op: "rhs",
            expected: a.nrows(),
            actual: b.len(),
        });
    }
    if let Some(x0) = x0 {
        if x0.len() != a.ncols() {
            return Err(Error::DimensionMismatch {
                op: "initial guess",
                expected: a.ncols(),
                actual: x0.len(),
            });
        }
    }
    Ok(())
}
