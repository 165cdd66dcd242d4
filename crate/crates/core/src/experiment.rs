//! Experiment driver: FT-GMRES against restarted and non-restarted GMRES
//! under identical fault schedules, with CSV output.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fault::{FaultLog, FaultPolicy, FaultTotals};
use crate::ft::{ft_gmres_with, scrub_vector, FtConfig, SandboxAudit, SandboxSession};
use crate::krylov::{GmresOptions, HistoryEntry, Outcome, SolveReport};
use crate::precond::{PrecondKind, Preconditioner};
use crate::sparse::vector::norm2;
use crate::sparse::{gen_log_diagonal, ones_rhs, read_matrix_market_file, uniform_rhs, CsrMatrix};

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    /// Diagonal with entries log-spaced over `decades` orders of magnitude.
    Diagonal {
        n: usize,
        decades: f64,
    },
    MatrixMarket(PathBuf),
}

impl Problem {
    pub fn load(&self) -> Result<CsrMatrix> {
        match self {
            Problem::Diagonal { n, decades } => gen_log_diagonal(*n, *decades),
            Problem::MatrixMarket(path) => read_matrix_market_file(path),
        }
    }
}

impl FromStr for Problem {
    type Err = Error;

    /// `diag:N:DECADES` or `mm:PATH`.
    fn from_str(s: &str) -> Result<Self> {
        if let Some(path) = s.strip_prefix("mm:") {
            if path.is_empty() {
                return Err(Error::invalid("mm: needs a path"));
            }
            return Ok(Problem::MatrixMarket(PathBuf::from(path)));
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["diag", n, d] => {
                let n = n
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad diagonal size '{n}'")))?;
                let decades = d
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad decade count '{d}'")))?;
                Ok(Problem::Diagonal { n, decades })
            }
            _ => Err(Error::invalid(format!(
                "unknown problem '{s}', expected diag:N:DECADES or mm:PATH"
            ))),
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Problem::Diagonal { n, decades } => write!(f, "diag:{n}:{decades}"),
            Problem::MatrixMarket(p) => write!(f, "mm:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rhs {
    /// `b = A·1`, so the exact solution is all ones.
    #[default]
    AonesProduct,
    SeededUniform(u64),
}

impl Rhs {
    pub fn build(&self, a: &CsrMatrix) -> Vec<f64> {
        match *self {
            Rhs::AonesProduct => ones_rhs(a),
            Rhs::SeededUniform(seed) => uniform_rhs(a.nrows(), seed),
        }
    }
}

impl FromStr for Rhs {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "aones" {
            return Ok(Rhs::AonesProduct);
        }
        s.strip_prefix("uniform:")
            .and_then(|seed| seed.parse().ok())
            .map(Rhs::SeededUniform)
            .ok_or_else(|| {
                Error::invalid(format!("unknown rhs '{s}', expected aones or uniform:SEED"))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverKind {
    #[default]
    FtGmres,
    /// `t` cycles of GMRES(`s`).
    RestartedGmres,
    /// One GMRES run of `s·t` iterations.
    Gmres,
}

impl SolverKind {
    pub fn label(self) -> &'static str {
        match self {
            SolverKind::FtGmres => "ftgmres",
            SolverKind::RestartedGmres => "rgmres",
            SolverKind::Gmres => "gmres",
        }
    }
}

impl FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ftgmres" => Ok(SolverKind::FtGmres),
            "rgmres" => Ok(SolverKind::RestartedGmres),
            "gmres" => Ok(SolverKind::Gmres),
            other => Err(Error::invalid(format!("unknown solver '{other}'"))),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One experiment. `ft.s`, `ft.t` and `ft.outer_tol` also size the
/// baseline solvers.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub problem: Problem,
    pub rhs: Rhs,
    pub solver: SolverKind,
    pub precond: PrecondKind,
    pub ft: FtConfig,
    pub fault: FaultPolicy,
}

impl ExperimentSpec {
    pub fn new(problem: Problem) -> Self {
        Self {
            problem,
            rhs: Rhs::default(),
            solver: SolverKind::default(),
            precond: PrecondKind::default(),
            ft: FtConfig::default(),
            fault: FaultPolicy::none(),
        }
    }
}

/// One residual evaluation, as written to CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRecord {
    pub solver: String,
    /// Outer iteration (FT-GMRES) or restart cycle.
    pub outer: usize,
    /// Cumulative inner (or plain) iterations.
    pub global_iter: usize,
    pub resid_rel: f64,
    pub faults_injected: u64,
    pub faults_detected: u64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub solver: SolverKind,
    pub records: Vec<ConvergenceRecord>,
    pub report: SolveReport,
    pub audit: SandboxAudit,
    pub log: FaultLog,
}

impl ExperimentResult {
    /// One-line summary of the run.
    pub fn summary(&self) -> String {
        let r = &self.report;
        format!(
            "solver={} outcome={} outer={} inner={} true_resid={:.3e} faults_injected={} faults_detected={} overflow={}",
            self.solver,
            r.outcome,
            r.iters,
            r.inner_iters,
            r.true_residual,
            r.faults.injected,
            r.faults.detected,
            r.faults.overflow
        )
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_records(out, &self.records)
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

pub fn write_records<W: Write>(out: W, records: &[ConvergenceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record([
            "solver",
            "outer",
            "global_iter",
            "resid_rel",
            "faults_injected",
            "faults_detected",
        ])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Loads the problem and runs the spec.
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let a = spec.problem.load()?;
    let b = spec.rhs.build(&a);
    run_on(spec, &a, &b)
}

/// Runs the spec on an already assembled system.
pub fn run_on(spec: &ExperimentSpec, a: &CsrMatrix, b: &[f64]) -> Result<ExperimentResult> {
    crate::krylov::check_system(a, b, None)?;
    spec.ft.validate()?;
    if spec.ft.s == 0 || spec.ft.t == 0 {
        return Err(Error::invalid("s and t must be positive"));
    }
    let m = Preconditioner::build(spec.precond, a)?;
    let mut session = SandboxSession::new(a, &m, spec.fault.clone(), &spec.ft)?;
    let label = spec.solver.label();
    let (report, records) = match spec.solver {
        SolverKind::FtGmres => {
            let report = ft_gmres_with(a, &mut session, b, None, &spec.ft)?;
            let records = report
                .history
                .iter()
                .map(|h| record(label, h.iteration, h.inner_iters, h.residual, h.faults))
                .collect();
            (report, records)
        }
        SolverKind::RestartedGmres => {
            restarted(&mut session, a, b, spec.ft.s, spec.ft.t, &spec.ft, label)
        }
        SolverKind::Gmres => restarted(
            &mut session,
            a,
            b,
            spec.ft.s * spec.ft.t,
            1,
            &spec.ft,
            label,
        ),
    };
    log::info!(
        "{label}: {} after {} iterations",
        report.outcome,
        report.iters
    );
    Ok(ExperimentResult {
        solver: spec.solver,
        records,
        report,
        audit: session.audit(),
        log: session.log().clone(),
    })
}

fn record(
    solver: &str,
    outer: usize,
    global_iter: usize,
    resid_rel: f64,
    faults: FaultTotals,
) -> ConvergenceRecord {
    ConvergenceRecord {
        solver: solver.to_string(),
        outer,
        global_iter,
        resid_rel,
        faults_injected: faults.injected,
        faults_detected: faults.detected,
    }
}

/// `cycles` cycles of GMRES(`per_cycle`) inside the sandbox; operators are
/// refreshed after every cycle. Convergence is checked with `a` at cycle ends.
fn restarted(
    session: &mut SandboxSession,
    a: &CsrMatrix,
    b: &[f64],
    per_cycle: usize,
    cycles: usize,
    cfg: &FtConfig,
    label: &str,
) -> (SolveReport, Vec<ConvergenceRecord>) {
    let n = a.nrows();
    let b_norm = norm2(b);
    let denom = if b_norm > 0.0 { b_norm } else { 1.0 };
    let mut x = vec![0.0; n];
    let mut records = Vec::new();
    let mut history = Vec::new();
    let mut total = 0;
    let mut outcome = Outcome::MaxIterations;
    let mut cycles_run = 0;

    let initial = a.residual_norm(b, &x) / denom;
    records.push(record(label, 0, 0, initial, session.totals()));
    history.push(HistoryEntry {
        iteration: 0,
        residual: initial,
        inner_iters: 0,
        faults: session.totals(),
    });
    if initial <= cfg.outer_tol {
        outcome = Outcome::Converged;
    }

    while outcome != Outcome::Converged && cycles_run < cycles {
        cycles_run += 1;
        let x0 = (cycles_run > 1).then_some(x.as_slice());
        let out = session.run_gmres(b, x0, GmresOptions::with_tol(per_cycle, cfg.outer_tol));
        for (&(j, resid), faults) in out.run.history.iter().zip(&out.faults).skip(1) {
            records.push(record(label, cycles_run, total + j, resid, *faults));
            history.push(HistoryEntry {
                iteration: total + j,
                residual: resid,
                inner_iters: total + j,
                faults: *faults,
            });
        }
        total += out.run.iters;
        x = out.run.x;
        scrub_vector(&mut x, cfg.repair_window);
        if a.residual_norm(b, &x) / denom <= cfg.outer_tol {
            outcome = Outcome::Converged;
        } else if out.run.iters == 0 {
            log::warn!("{label}: cycle {cycles_run} made no progress");
        }
    }

    let report = SolveReport {
        outcome,
        true_residual: a.residual_norm(b, &x) / denom,
        x,
        history,
        iters: total,
        inner_iters: total,
        faults: session.totals(),
        recoveries: 0,
        guard_fallback: false,
    };
    (report, records)
}

/// Outer iterations to convergence over a tolerance × fault-policy grid.
#[derive(Debug, Clone)]
pub struct IterationTable {
    pub tolerances: Vec<f64>,
    pub faults: Vec<(String, FaultPolicy)>,
    /// `counts[i][k]` for tolerance `i` and fault column `k`; `None` when
    /// the run did not converge within `t` outer iterations.
    pub counts: Vec<Vec<Option<usize>>>,
}

/// Runs FT-GMRES once per (tolerance, fault policy) pair.
pub fn table_iterations(
    base: &ExperimentSpec,
    a: &CsrMatrix,
    b: &[f64],
    tolerances: &[f64],
    faults: &[(String, FaultPolicy)],
) -> Result<IterationTable> {
    let mut counts = Vec::with_capacity(tolerances.len());
    for &tol in tolerances {
        let mut row = Vec::with_capacity(faults.len());
        for (_, policy) in faults {
            let spec = ExperimentSpec {
                solver: SolverKind::FtGmres,
                ft: FtConfig {
                    outer_tol: tol,
                    ..base.ft.clone()
                },
                fault: policy.clone(),
                ..base.clone()
            };
            let res = run_on(&spec, a, b)?;
            row.push((res.report.outcome == Outcome::Converged).then_some(res.report.iters));
        }
        counts.push(row);
    }
    Ok(IterationTable {
        tolerances: tolerances.to_vec(),
        faults: faults.to_vec(),
        counts,
    })
}

impl IterationTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["tolerance".to_string()];
        header.extend(self.faults.iter().map(|(l, _)| l.clone()));
        w.write_record(&header)?;
        for (tol, row) in self.tolerances.iter().zip(&self.counts) {
            let mut rec = vec![format!("{tol:e}")];
            rec.extend(
                row.iter()
                    .map(|c| c.map_or_else(|| "-".to_string(), |c| c.to_string())),
            );
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for IterationTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>10}", "tol")?;
        for (label, _) in &self.faults {
            write!(f, " {label:>12}")?;
        }
        writeln!(f)?;
        for (tol, row) in self.tolerances.iter().zip(&self.counts) {
            write!(f, "{:>10.0e}", tol)?;
            for c in row {
                match c {
                    Some(c) => write!(f, " {c:>12}")?,
                    None => write!(f, " {:>12}", "-")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(solver: SolverKind) -> ExperimentSpec {
        ExperimentSpec {
            solver,
            ft: FtConfig {
                s: 10,
                t: 5,
                outer_tol: 1e-10,
                ..FtConfig::default()
            },
            ..ExperimentSpec::new(Problem::Diagonal {
                n: 100,
                decades: 3.0,
            })
        }
    }

    #[test]
    fn parse_problem_and_rhs() {
        assert_eq!(
            "diag:10000:10".parse::<Problem>().unwrap(),
            Problem::Diagonal {
                n: 10000,
                decades: 10.0
            }
        );
        assert_eq!(
            "mm:data/x.mtx".parse::<Problem>().unwrap(),
            Problem::MatrixMarket("data/x.mtx".into())
        );
        assert!("diag:10".parse::<Problem>().is_err());
        assert_eq!("uniform:7".parse::<Rhs>().unwrap(), Rhs::SeededUniform(7));
        assert!("uniform:x".parse::<Rhs>().is_err());
        assert_eq!(
            "rgmres".parse::<SolverKind>().unwrap(),
            SolverKind::RestartedGmres
        );
    }

    #[test]
    fn ft_records_one_row_per_outer_iteration() {
        let res = run(&small_spec(SolverKind::FtGmres)).unwrap();
        assert_eq!(res.records.len(), res.report.iters + 1);
        assert!(res.records.iter().enumerate().all(|(i, r)| r.outer == i));
    }

    #[test]
    fn gmres_uses_s_times_t_iterations() {
        let mut spec = small_spec(SolverKind::Gmres);
        spec.ft.outer_tol = 1e-30;
        let res = run(&spec).unwrap();
        assert_eq!(res.report.iters, 50);
        assert!(res.records.iter().skip(1).all(|r| r.outer == 1));
    }

    #[test]
    fn restarted_cycles_are_labelled() {
        let mut spec = small_spec(SolverKind::RestartedGmres);
        spec.ft.outer_tol = 1e-30;
        let res = run(&spec).unwrap();
        assert_eq!(res.report.iters, 50);
        let last = res.records.last().unwrap();
        assert_eq!((last.outer, last.global_iter), (5, 50));
        assert!(res.audit.is_clean());
    }

    #[test]
    fn csv_is_reproducible() {
        let mut spec = small_spec(SolverKind::FtGmres);
        spec.fault = FaultPolicy::poisson(1e6, 5).with_time_step(0.1);
        let mut a = Vec::new();
        let mut b = Vec::new();
        run(&spec).unwrap().write_csv(&mut a).unwrap();
        run(&spec).unwrap().write_csv(&mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text
            .starts_with("solver,outer,global_iter,resid_rel,faults_injected,faults_detected\n"));
    }

    #[test]
    fn table_marks_non_convergence() {
        let base = small_spec(SolverKind::FtGmres);
        let a = base.problem.load().unwrap();
        let b = base.rhs.build(&a);
        let faults = vec![("none".to_string(), FaultPolicy::none())];
        let table = table_iterations(&base, &a, &b, &[1e-1, 1e-300], &faults).unwrap();
        assert_eq!(table.counts[0][0], Some(1));
        assert_eq!(table.counts[1][0], None);
        let mut out = Vec::new();
        table.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "tolerance,none\n1e-1,1\n1e-300,-\n"
        );
    }
}
