//! Software model of a selective-reliability memory system.
//!
//! Storage that may suffer soft faults is registered with a
//! [`FaultRegistry`] as a region. While a region is marked failable,
//! injected bit flips may land in it; the registry also keeps reliable
//! checkpoint copies for refresh and a bounded log of every fault it
//! injected. Time is a logical clock advanced at explicit injection points,
//! which keeps every run reproducible from its seed.

mod log;
mod policy;
mod registry;
mod repair;

pub use self::log::{FaultBit, FaultEvent, FaultLog, FaultTotals, DEFAULT_LOG_CAPACITY};
pub use self::policy::{FaultMode, FaultPolicy, BYTES_PER_MB};
pub use self::registry::{flip_bit, FailableMemory, FaultRegistry, RegionId, SliceMemory};
pub use self::repair::repair_neighbor_average;
