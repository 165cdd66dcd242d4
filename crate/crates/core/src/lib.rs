//! Fault-tolerant GMRES.
//!
//! A reliable Flexible GMRES outer iteration drives unreliable inner GMRES
//! solves that run inside a simulated fault sandbox. The crate also carries
//! the pieces this needs: CSR matrices, simple preconditioners, a fault
//! injection engine and an experiment harness.
//!
//! ```
//! use ftgmres_core::{ft_gmres, gen_log_diagonal, ones_rhs, FaultPolicy, FtConfig, Outcome, Preconditioner};
//!
//! let a = gen_log_diagonal(50, 3.0).unwrap();
//! let b = ones_rhs(&a);
//! let m = Preconditioner::identity(50);
//! let cfg = FtConfig { s: 20, t: 20, outer_tol: 1e-6, ..FtConfig::default() };
//! let run = ft_gmres(&a, &m, &b, None, &cfg, &FaultPolicy::pattern_bits(&[0, 0, 1])).unwrap();
//! assert_eq!(run.report.outcome, Outcome::Converged);
//! assert!(run.audit.is_clean());
//! ```

pub mod error;
pub mod experiment;
pub mod fault;
pub mod ft;
pub mod krylov;
pub mod precond;
pub mod sparse;

pub use error::{Error, Result};
pub use fault::{FaultLog, FaultMode, FaultPolicy, FaultRegistry, FaultTotals, RegionId};
pub use ft::{
    ft_gmres, ft_gmres_with, FtConfig, FtGmres, InnerSolver, Recovery, Refresh, SandboxSession,
    Schedule,
};
pub use krylov::{fgmres, gmres, HistoryEntry, Outcome, SolveReport};
pub use precond::{PrecondKind, Preconditioner};
pub use sparse::{
    gen_log_diagonal, ones_rhs, read_matrix_market_file, uniform_rhs, CsrMatrix, DenseVector,
};
