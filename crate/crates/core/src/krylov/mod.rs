//! GMRES, Flexible GMRES and the pieces they share.

mod arnoldi;
mod fgmres;
mod gmres;
mod hessenberg;
mod rank;
mod report;

pub use arnoldi::{Candidate, FlexibleArnoldi, OuterOptions};
pub use fgmres::fgmres;
pub(crate) use gmres::check_system;
pub use gmres::{
    gmres, gmres_with_context, GmresOptions, GmresRun, KrylovContext, OpKind, Reliable,
};
pub use hessenberg::Hessenberg;
pub use rank::{rank_check, singular_values, RankInfo, DEFAULT_RANK_TOL};
pub use report::{HistoryEntry, Outcome, SolveReport};

/// Default relative tolerance for detecting `H(j+1, j) = 0`, scaled by `‖b‖₂`.
pub const DEFAULT_BREAKDOWN_TOL: f64 = 1e-12;
