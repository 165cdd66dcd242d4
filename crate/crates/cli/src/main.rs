use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ftgmres_core::experiment::{
    run_on, table_iterations, ExperimentSpec, Problem, Rhs, SolverKind,
};
use ftgmres_core::{FaultPolicy, FtConfig, PrecondKind, Recovery, Refresh, Schedule};

/// Fault-tolerant GMRES experiments.
#[derive(Parser, Debug)]
#[command(name = "ftgmres", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one system and write its convergence history as CSV.
    Run(RunArgs),
    /// Outer iterations to convergence over tolerances × fault policies.
    Table(TableArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// diag:N:DECADES or mm:PATH
    #[arg(long, default_value = "diag:10000:10")]
    problem: Problem,
    /// aones or uniform:SEED
    #[arg(long, default_value = "aones")]
    rhs: Rhs,
    /// Inner iterations (FT-GMRES), cycle length (rgmres); gmres runs s·t.
    #[arg(long, default_value_t = 50)]
    s: usize,
    /// Outer iterations or restart cycles.
    #[arg(long, default_value_t = 10)]
    t: usize,
    /// none, jacobi or ilu0
    #[arg(long, default_value = "none")]
    precond: PrecondKind,
    /// Scrubber detection probability.
    #[arg(long, default_value_t = 0.9)]
    pdetect: f64,
    /// Simulated seconds per inner operation (Poisson faults).
    #[arg(long, default_value_t = 1e-3)]
    time_per_op: f64,
    /// always or ondetect
    #[arg(long, default_value = "always")]
    refresh: Refresh,
    /// retry, randomz or lastgood
    #[arg(long, default_value = "retry")]
    recovery: Recovery,
    /// decreasing (s-k+1 at outer k) or constant
    #[arg(long, default_value = "decreasing")]
    schedule: Schedule,
    /// Keep inner Krylov basis vectors reliable.
    #[arg(long)]
    reliable_vectors: bool,
    /// Disable the first-inner-solve guard.
    #[arg(long)]
    no_guard: bool,
    /// Seed for random recovery directions.
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// ftgmres, rgmres or gmres
    #[arg(long, default_value = "ftgmres")]
    solver: SolverKind,
    /// Outer relative residual tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// none, pattern:0,0,1 or poisson:RATE:SEED
    #[arg(long, default_value = "none")]
    fault: FaultPolicy,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the fault log as CSV.
    #[arg(long)]
    fault_log: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated outer tolerances.
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-4,1e-6,1e-8")]
    tols: Vec<f64>,
    /// Fault policies, one per column; repeat the flag for more columns.
    #[arg(long = "fault", default_values = ["none", "pattern:0,0,0,0,0,0,0,0,0,1", "pattern:0,0,0,0,1,0,0,1,0,1", "pattern:1,0,1,0,1,0,0,1,0,1"])]
    faults: Vec<String>,
    /// CSV output path; a text table goes to stdout either way.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn spec(&self, solver: SolverKind, tol: f64, fault: &FaultPolicy) -> Result<ExperimentSpec> {
        if self.s == 0 || self.t == 0 {
            bail!("--s and --t must be positive");
        }
        if self.time_per_op.is_nan() || self.time_per_op <= 0.0 {
            bail!("--time-per-op must be positive");
        }
        let fault = fault
            .clone()
            .with_p_detect(self.pdetect)
            .with_time_step(self.time_per_op);
        fault.validate()?;
        Ok(ExperimentSpec {
            problem: self.problem.clone(),
            rhs: self.rhs,
            solver,
            precond: self.precond,
            ft: FtConfig {
                s: self.s,
                t: self.t,
                schedule: self.schedule,
                outer_tol: tol,
                recovery: self.recovery,
                refresh: self.refresh,
                inner_vectors_failable: !self.reliable_vectors,
                first_solve_guard: !self.no_guard,
                seed: self.seed,
                ..FtConfig::default()
            },
            fault,
        })
    }
}

fn run(args: RunArgs) -> Result<()> {
    let spec = args.common.spec(args.solver, args.tol, &args.fault)?;
    let a = spec
        .problem
        .load()
        .with_context(|| format!("loading {}", spec.problem))?;
    let b = spec.rhs.build(&a);
    let result = run_on(&spec, &a, &b)?;

    match &args.out {
        Some(path) => {
            result
                .write_csv_file(path)
                .with_context(|| format!("writing {}", path.display()))?;
            println!("{}", result.summary());
        }
        None => {
            result.write_csv(io::stdout().lock())?;
            eprintln!("{}", result.summary());
        }
    }
    if let Some(path) = &args.fault_log {
        let file = File::create(path).with_context(|| format!("writing {}", path.display()))?;
        result.log.write_csv(file)?;
    }
    Ok(())
}

fn table(args: TableArgs) -> Result<()> {
    if args.tols.is_empty() || args.faults.is_empty() {
        bail!("need at least one tolerance and one fault policy");
    }
    let faults = args
        .faults
        .iter()
        .map(|f| {
            let policy: FaultPolicy = f.parse().with_context(|| format!("--fault {f}"))?;
            let spec = args.common.spec(SolverKind::FtGmres, 1.0, &policy)?;
            Ok((f.clone(), spec.fault))
        })
        .collect::<Result<Vec<_>>>()?;
    for &tol in &args.tols {
        if tol.is_nan() || tol <= 0.0 {
            bail!("tolerance must be positive, got {tol}");
        }
    }
    let base = args
        .common
        .spec(SolverKind::FtGmres, args.tols[0], &FaultPolicy::none())?;
    let a = base
        .problem
        .load()
        .with_context(|| format!("loading {}", base.problem))?;
    let b = base.rhs.build(&a);
    let table = table_iterations(&base, &a, &b, &args.tols, &faults)?;
    let mut stdout = io::stdout().lock();
    write!(stdout, "{table}")?;
    if let Some(path) = &args.out {
        let file = File::create(path).with_context(|| format!("writing {}", path.display()))?;
        table.write_csv(file)?;
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Table(args) => table(args),
    }
}
