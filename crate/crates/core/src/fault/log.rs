use std::collections::VecDeque;
use std::io::Write;

use serde::Serialize;

use super::RegionId;
use crate::error::Result;

pub const DEFAULT_LOG_CAPACITY: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultBit {
    /// Flip of bit `0..64` of an IEEE-754 double (63 = sign).
    Flip(u8),
    /// The deterministic "+1 on the first entry" corruption of an output vector.
    AddOne,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultEvent {
    /// `None` for corruptions of operation outputs that live in no region.
    pub region: Option<RegionId>,
    pub element: usize,
    pub bit: FaultBit,
    pub logical_time: f64,
    pub detected: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FaultTotals {
    pub injected: u64,
    pub detected: u64,
    pub overflow: u64,
}

/// Bounded event log. When full, the oldest event is dropped and counted.
#[derive(Debug, Clone)]
pub struct FaultLog {
    events: VecDeque<FaultEvent>,
    capacity: usize,
    totals: FaultTotals,
}

#[derive(Serialize)]
struct CsvRow {
    logical_time: f64,
    region: String,
    element: usize,
    bit: String,
    detected: bool,
}

impl FaultLog {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "fault log capacity must be positive");
        Self {
            events: VecDeque::with_capacity(capacity.min(4096)),
            capacity,
            totals: FaultTotals::default(),
        }
    }

    pub fn push(&mut self, event: FaultEvent) {
        if self.events.len() == self.capacity {
            self.events.pop_front();
            self.totals.overflow += 1;
        }
        self.totals.injected += 1;
        if event.detected {
            self.totals.detected += 1;
        }
        self.events.push_back(event);
    }

    pub fn totals(&self) -> FaultTotals {
        self.totals
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Retained events, oldest first.
    pub fn events(&self) -> impl Iterator<Item = &FaultEvent> {
        self.events.iter()
    }

    /// CSV with columns `logical_time,region,element,bit,detected`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for e in &self.events {
            w.serialize(CsvRow {
                logical_time: e.logical_time,
                region: e
                    .region
                    .map_or_else(|| "none".to_string(), |r| r.to_string()),
                element: e.element,
                bit: match e.bit {
                    FaultBit::Flip(b) => b.to_string(),
                    FaultBit::AddOne => "add_one".to_string(),
                },
                detected: e.detected,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}
