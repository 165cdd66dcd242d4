//! Fault-tolerant GMRES: a reliable flexible outer iteration around
//! unreliable inner GMRES solves that run inside a fault sandbox.

mod config;
mod recovery;
mod sandbox;
mod scrub;
mod solver;

pub use config::{FtConfig, Recovery, Refresh, Schedule};
pub use recovery::{estimate_inverse_norm, random_direction, recover, RecoveryAction};
pub use sandbox::{InnerOutput, SandboxAudit, SandboxContext, SandboxRun, SandboxSession};
pub use scrub::{prepare_direction, scrub_vector, RESCALE_THRESHOLD};
pub use solver::{
    first_inner_solve_guard, ft_gmres, ft_gmres_with, FtGmres, GuardVerdict, InnerSolver,
};
