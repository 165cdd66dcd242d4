use std::fmt;
use std::str::FromStr;

use super::log::DEFAULT_LOG_CAPACITY;
use crate::error::{Error, Result};

pub const BYTES_PER_MB: f64 = 1024.0 * 1024.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FaultMode {
    #[default]
    None,
    /// Cyclic Boolean sequence consumed once per faultable operation.
    Deterministic,
    /// Bit flips arriving as a Poisson process on the logical clock.
    Poisson,
}

/// When and how faults are injected.
#[derive(Debug, Clone, PartialEq)]
pub struct FaultPolicy {
    pub mode: FaultMode,
    pub pattern: Vec<bool>,
    /// Faults per MB of failable memory per hour.
    pub rate: f64,
    pub seed: u64,
    /// Simulated seconds charged to each injection point.
    pub time_step: f64,
    /// Probability that an injected fault is reported by the scrubber.
    pub p_detect: f64,
    pub log_capacity: usize,
}

impl Default for FaultPolicy {
    fn default() -> Self {
        Self {
            mode: FaultMode::None,
            pattern: Vec::new(),
            rate: 0.0,
            seed: 0,
            time_step: 1e-3,
            p_detect: 0.9,
            log_capacity: DEFAULT_LOG_CAPACITY,
        }
    }
}

impl FaultPolicy {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn pattern(pattern: impl Into<Vec<bool>>) -> Self {
        Self {
            mode: FaultMode::Deterministic,
            pattern: pattern.into(),
            ..Self::default()
        }
    }

    /// Pattern from 0/1 digits, e.g. `&[1, 0, 1, 0, 0, 0, 0, 0, 0, 0]`.
    pub fn pattern_bits(bits: &[u8]) -> Self {
        Self::pattern(bits.iter().map(|&b| b != 0).collect::<Vec<_>>())
    }

    pub fn poisson(rate: f64, seed: u64) -> Self {
        Self {
            mode: FaultMode::Poisson,
            rate,
            seed,
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_time_step(mut self, seconds: f64) -> Self {
        self.time_step = seconds;
        self
    }

    pub fn with_p_detect(mut self, p: f64) -> Self {
        self.p_detect = p;
        self
    }

    pub fn with_log_capacity(mut self, capacity: usize) -> Self {
        self.log_capacity = capacity;
        self
    }

    pub fn is_none(&self) -> bool {
        self.mode == FaultMode::None
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_detect) {
            return Err(Error::invalid(format!(
                "p_detect {} outside [0, 1]",
                self.p_detect
            )));
        }
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(Error::invalid(format!(
                "fault rate {} must be finite and >= 0",
                self.rate
            )));
        }
        if !(self.time_step >= 0.0 && self.time_step.is_finite()) {
            return Err(Error::invalid("time step must be finite and >= 0"));
        }
        if self.mode == FaultMode::Deterministic && self.pattern.is_empty() {
            return Err(Error::EmptyPattern);
        }
        if self.log_capacity == 0 {
            return Err(Error::invalid("fault log capacity must be positive"));
        }
        Ok(())
    }
}

/// `none`, `pattern:0,0,1` or `poisson:RATE:SEED`.
impl FromStr for FaultPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("bad fault spec '{s}'"));
        if s == "none" {
            return Ok(Self::none());
        }
        if let Some(rest) = s.strip_prefix("pattern:") {
            let bits = rest
                .split(',')
                .map(|t| match t.trim() {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    _ => Err(bad()),
                })
                .collect::<Result<Vec<bool>>>()?;
            let p = Self::pattern(bits);
            p.validate()?;
            return Ok(p);
        }
        if let Some(rest) = s.strip_prefix("poisson:") {
            let (rate, seed) = rest.split_once(':').ok_or_else(bad)?;
            let p = Self::poisson(
                rate.parse().map_err(|_| bad())?,
                seed.parse().map_err(|_| bad())?,
            );
            p.validate()?;
            return Ok(p);
        }
        Err(bad())
    }
}

impl fmt::Display for FaultPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            FaultMode::None => f.write_str("none"),
            FaultMode::Deterministic => {
                f.write_str("pattern:")?;
                for (i, b) in self.pattern.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    f.write_str(if *b { "1" } else { "0" })?;
                }
                Ok(())
            }
            FaultMode::Poisson => write!(f, "poisson:{}:{}", self.rate, self.seed),
        }
    }
}
