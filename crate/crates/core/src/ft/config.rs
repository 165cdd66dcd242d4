use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Inner iteration budget per outer iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    /// `max(s - k + 1, 1)` at outer iteration `k`, so the total basis
    /// storage matches restarted GMRES(s).
    #[default]
    Decreasing,
    Constant,
}

/// What to do when the outer Hessenberg turns out rank deficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Recovery {
    /// Redo the inner solve for the current iteration.
    #[default]
    RetryInner,
    /// Replace `z_j` with a random vector scaled by an estimate of `‖A⁻¹‖`.
    RandomZ,
    /// Stop and return `x_{j-1}`.
    ReturnLastGood,
}

/// When the sandbox copies operator values back from their checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Refresh {
    /// After every inner solve.
    #[default]
    Always,
    /// Only for regions where the scrubber reported a fault.
    OnDetection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FtConfig {
    /// Base inner iteration count.
    pub s: usize,
    /// Maximum outer iterations.
    pub t: usize,
    pub schedule: Schedule,
    pub outer_tol: f64,
    pub recovery: Recovery,
    pub refresh: Refresh,
    pub inner_vectors_failable: bool,
    pub first_solve_guard: bool,
    /// Recovery attempts per outer iteration before giving up with `x_{j-1}`.
    pub max_retries: usize,
    /// Optional early exit for inner solves (off by default).
    pub inner_tol: Option<f64>,
    /// Neighbor window for NaN/Inf repair.
    pub repair_window: usize,
    /// Seed for random replacement directions.
    pub seed: u64,
}

impl Default for FtConfig {
    fn default() -> Self {
        Self {
            s: 50,
            t: 10,
            schedule: Schedule::Decreasing,
            outer_tol: 1e-8,
            recovery: Recovery::RetryInner,
            refresh: Refresh::Always,
            inner_vectors_failable: true,
            first_solve_guard: true,
            max_retries: 2,
            inner_tol: None,
            repair_window: 2,
            seed: 0x5eed,
        }
    }
}

impl FtConfig {
    /// Inner budget at 1-based outer iteration `k`.
    pub fn inner_budget(&self, k: usize) -> usize {
        match self.schedule {
            Schedule::Constant => self.s,
            Schedule::Decreasing => (self.s + 1).saturating_sub(k).max(1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.outer_tol.is_nan() || self.outer_tol <= 0.0 {
            return Err(Error::invalid(format!(
                "outer tolerance must be positive, got {}",
                self.outer_tol
            )));
        }
        if self.inner_tol.is_some_and(|t| t.is_nan() || t <= 0.0) {
            return Err(Error::invalid("inner tolerance must be positive"));
        }
        if self.repair_window == 0 {
            return Err(Error::invalid("repair window must be at least 1"));
        }
        Ok(())
    }
}

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, { $($name:literal => $variant:expr),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(Error::invalid(format!(concat!("unknown ", $what, " '{}'"), other))),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                $(if *self == $variant { return f.write_str($name); })+
                unreachable!()
            }
        }
    };
}

keyword_enum!(Recovery, "recovery", {
    "retry" => Recovery::RetryInner,
    "randomz" => Recovery::RandomZ,
    "lastgood" => Recovery::ReturnLastGood,
});

keyword_enum!(Refresh, "refresh policy", {
    "always" => Refresh::Always,
    "ondetect" => Refresh::OnDetection,
});

keyword_enum!(Schedule, "schedule", {
    "decreasing" => Schedule::Decreasing,
    "constant" => Schedule::Constant,
});
