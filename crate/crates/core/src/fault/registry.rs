use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::log::{FaultBit, FaultEvent, FaultLog, FaultTotals};
use super::policy::{FaultMode, FaultPolicy, BYTES_PER_MB};
use crate::error::{Error, Result};

const SECONDS_PER_HOUR: f64 = 3600.0;

/// Opaque handle for a registered region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RegionId(usize);

impl RegionId {
    pub fn from_raw(raw: usize) -> Self {
        RegionId(raw)
    }

    pub fn raw(self) -> usize {
        self.0
    }
}

impl fmt::Display for RegionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Resolves region handles to the storage they describe.
///
/// The registry never owns the data it guards; callers lend it at each
/// injection point through this trait.
pub trait FailableMemory {
    fn region_mut(&mut self, id: RegionId) -> Option<&mut [f64]>;
}

/// A list of borrowed slices keyed by region.
#[derive(Default)]
pub struct SliceMemory<'a> {
    slots: Vec<(RegionId, &'a mut [f64])>,
}

impl<'a> SliceMemory<'a> {
    pub fn new() -> Self {
        Self { slots: Vec::new() }
    }

    pub fn with(mut self, id: RegionId, data: &'a mut [f64]) -> Self {
        self.push(id, data);
        self
    }

    pub fn push(&mut self, id: RegionId, data: &'a mut [f64]) {
        self.slots.push((id, data));
    }
}

impl FailableMemory for SliceMemory<'_> {
    fn region_mut(&mut self, id: RegionId) -> Option<&mut [f64]> {
        self.slots
            .iter_mut()
            .find(|(r, _)| *r == id)
            .map(|(_, d)| &mut **d)
    }
}

/// Flips one bit of an IEEE-754 double.
pub fn flip_bit(value: f64, bit: u8) -> f64 {
    debug_assert!(bit < 64);
    f64::from_bits(value.to_bits() ^ (1u64 << bit))
}

#[derive(Debug, Clone)]
struct RegionMeta {
    len: usize,
    failable: bool,
    checkpoint: Option<Vec<f64>>,
    injected: u64,
    detected_since_checkpoint: u64,
}

/// Region registry, fault injector and fault log.
#[derive(Debug, Clone)]
pub struct FaultRegistry {
    regions: Vec<Option<RegionMeta>>,
    policy: FaultPolicy,
    rng: ChaCha8Rng,
    pattern_pos: usize,
    clock: f64,
    log: FaultLog,
}

impl FaultRegistry {
    pub fn new(policy: FaultPolicy) -> Result<Self> {
        policy.validate()?;
        Ok(Self {
            regions: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(policy.seed),
            log: FaultLog::new(policy.log_capacity),
            policy,
            pattern_pos: 0,
            clock: 0.0,
        })
    }

    pub fn policy(&self) -> &FaultPolicy {
        &self.policy
    }

    pub fn log(&self) -> &FaultLog {
        &self.log
    }

    pub fn totals(&self) -> FaultTotals {
        self.log.totals()
    }

    /// Simulated seconds since creation.
    pub fn clock(&self) -> f64 {
        self.clock
    }

    /// Registers `len` doubles of storage. New regions are reliable.
    pub fn register(&mut self, len: usize) -> RegionId {
        self.regions.push(Some(RegionMeta {
            len,
            failable: false,
            checkpoint: None,
            injected: 0,
            detected_since_checkpoint: 0,
        }));
        RegionId(self.regions.len() - 1)
    }

    pub fn unregister(&mut self, id: RegionId) -> Result<()> {
        self.meta(id)?;
        self.regions[id.0] = None;
        Ok(())
    }

    fn meta(&self, id: RegionId) -> Result<&RegionMeta> {
        self.regions
            .get(id.0)
            .and_then(Option::as_ref)
            .ok_or(Error::UnknownRegion(id))
    }

    fn meta_mut(&mut self, id: RegionId) -> Result<&mut RegionMeta> {
        self.regions
            .get_mut(id.0)
            .and_then(Option::as_mut)
            .ok_or(Error::UnknownRegion(id))
    }

    pub fn mark_failable(&mut self, id: RegionId) -> Result<()> {
        self.meta_mut(id)?.failable = true;
        Ok(())
    }

    pub fn unmark_failable(&mut self, id: RegionId) -> Result<()> {
        self.meta_mut(id)?.failable = false;
        Ok(())
    }

    pub fn is_failable(&self, id: RegionId) -> Result<bool> {
        Ok(self.meta(id)?.failable)
    }

    pub fn region_ids(&self) -> impl Iterator<Item = RegionId> + '_ {
        self.regions
            .iter()
            .enumerate()
            .filter(|(_, m)| m.is_some())
            .map(|(i, _)| RegionId(i))
    }

    pub fn any_failable(&self) -> bool {
        self.regions.iter().flatten().any(|m| m.failable)
    }

    /// Bytes currently marked failable.
    pub fn failable_bytes(&self) -> usize {
        self.regions
            .iter()
            .flatten()
            .filter(|m| m.failable)
            .map(|m| m.len * std::mem::size_of::<f64>())
            .sum()
    }

    /// Faults injected into `id` over its lifetime.
    pub fn injected_in(&self, id: RegionId) -> Result<u64> {
        Ok(self.meta(id)?.injected)
    }

    /// Detected faults in `id` since its last checkpoint or restore.
    pub fn detected_in(&self, id: RegionId) -> Result<u64> {
        Ok(self.meta(id)?.detected_since_checkpoint)
    }

    /// Saves a reliable copy of `data` for region `id`.
    pub fn checkpoint(&mut self, id: RegionId, data: &[f64]) -> Result<()> {
        let meta = self.meta_mut(id)?;
        check_len(meta.len, data.len())?;
        meta.checkpoint = Some(data.to_vec());
        meta.detected_since_checkpoint = 0;
        Ok(())
    }

    /// Overwrites `data` with the last checkpoint of `id`.
    pub fn restore(&mut self, id: RegionId, data: &mut [f64]) -> Result<()> {
        let meta = self.meta_mut(id)?;
        check_len(meta.len, data.len())?;
        let saved = meta.checkpoint.as_ref().ok_or(Error::NoCheckpoint(id))?;
        data.copy_from_slice(saved);
        meta.detected_since_checkpoint = 0;
        Ok(())
    }

    /// Restores only when the scrubber has reported faults in `id`.
    /// Returns whether a copy was performed.
    pub fn restore_if_detected(&mut self, id: RegionId, data: &mut [f64]) -> Result<bool> {
        let meta = self.meta(id)?;
        if meta.checkpoint.is_none() {
            return Err(Error::NoCheckpoint(id));
        }
        if meta.detected_since_checkpoint == 0 {
            return Ok(false);
        }
        self.restore(id, data)?;
        Ok(true)
    }

    /// Whether `data` is bitwise-equal to the checkpoint of `id`.
    pub fn matches_checkpoint(&self, id: RegionId, data: &[f64]) -> Result<bool> {
        let saved = self
            .meta(id)?
            .checkpoint
            .as_ref()
            .ok_or(Error::NoCheckpoint(id))?;
        Ok(crate::sparse::vector::bitwise_eq(saved, data))
    }

    /// Scrubber model: reports a fault with probability `p_detect`.
    pub fn classify(&mut self) -> bool {
        let p = self.policy.p_detect;
        if p >= 1.0 {
            true
        } else if p <= 0.0 {
            false
        } else {
            self.rng.random_bool(p)
        }
    }

    /// Reads the next entry of the cyclic pattern.
    pub fn consume_pattern(&mut self) -> Result<bool> {
        if self.policy.mode != FaultMode::Deterministic {
            return Err(Error::WrongFaultMode {
                expected: "deterministic",
            });
        }
        if self.policy.pattern.is_empty() {
            return Err(Error::EmptyPattern);
        }
        let hit = self.policy.pattern[self.pattern_pos % self.policy.pattern.len()];
        self.pattern_pos += 1;
        Ok(hit)
    }

    /// Number of pattern entries consumed so far.
    pub fn pattern_position(&self) -> usize {
        self.pattern_pos
    }

    /// Consumes one pattern entry; when it is set, adds 1 to `v[0]` and
    /// logs the event. Returns whether a fault was applied.
    pub fn apply_deterministic_fault(&mut self, v: &mut [f64]) -> Result<bool> {
        if !self.consume_pattern()? {
            return Ok(false);
        }
        if let Some(first) = v.first_mut() {
            *first += 1.0;
        }
        let detected = self.classify();
        self.log.push(FaultEvent {
            region: None,
            element: 0,
            bit: FaultBit::AddOne,
            logical_time: self.clock,
            detected,
        });
        Ok(true)
    }

    /// Advances the logical clock and, in Poisson mode, injects the faults
    /// that arrived during `elapsed` seconds into currently failable regions.
    ///
    /// Locations are uniform over all failable doubles, so regions are hit in
    /// proportion to their size. Each event flips one uniformly chosen bit.
    pub fn advance_clock<M: FailableMemory + ?Sized>(
        &mut self,
        elapsed: f64,
        mem: &mut M,
    ) -> Vec<FaultEvent> {
        self.clock += elapsed;
        if self.policy.mode != FaultMode::Poisson || self.policy.rate <= 0.0 || elapsed <= 0.0 {
            return Vec::new();
        }
        let marked: Vec<(usize, usize)> = self
            .regions
            .iter()
            .enumerate()
            .filter_map(|(i, m)| {
                m.as_ref()
                    .filter(|m| m.failable && m.len > 0)
                    .map(|m| (i, m.len))
            })
            .collect();
        let total: usize = marked.iter().map(|&(_, len)| len).sum();
        if total == 0 {
            return Vec::new();
        }
        let mb = (total * std::mem::size_of::<f64>()) as f64 / BYTES_PER_MB;
        let lambda = self.policy.rate * mb * elapsed / SECONDS_PER_HOUR;
        let count = Poisson::new(lambda)
            .map(|d| d.sample(&mut self.rng) as u64)
            .unwrap_or(0);

        let mut events = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let mut pick = self.rng.random_range(0..total);
            let &(slot, _) = marked
                .iter()
                .find(|&&(_, len)| {
                    if pick < len {
                        true
                    } else {
                        pick -= len;
                        false
                    }
                })
                .expect("pick below total");
            let bit = self.rng.random_range(0..64u8);
            let id = RegionId(slot);
            let data = mem
                .region_mut(id)
                .unwrap_or_else(|| panic!("failable region {id} not provided by memory"));
            data[pick] = flip_bit(data[pick], bit);

            let detected = self.classify();
            let meta = self.regions[slot].as_mut().unwrap();
            meta.injected += 1;
            if detected {
                meta.detected_since_checkpoint += 1;
            }
            let event = FaultEvent {
                region: Some(id),
                element: pick,
                bit: FaultBit::Flip(bit),
                logical_time: self.clock,
                detected,
            };
            self.log.push(event);
            events.push(event);
        }
        events
    }
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            op: "region",
            expected,
            actual,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson(rate: f64, seed: u64) -> FaultRegistry {
        FaultRegistry::new(FaultPolicy::poisson(rate, seed)).unwrap()
    }

    #[test]
    fn new_regions_are_reliable() {
        let mut reg = poisson(1.0, 0);
        let id = reg.register(4);
        assert!(!reg.is_failable(id).unwrap());
        reg.mark_failable(id).unwrap();
        reg.mark_failable(id).unwrap();
        assert!(reg.is_failable(id).unwrap());
        reg.unmark_failable(id).unwrap();
        assert!(!reg.is_failable(id).unwrap());
    }

    #[test]
    fn unknown_region_is_an_error() {
        let mut reg = poisson(1.0, 0);
        let id = reg.register(1);
        reg.unregister(id).unwrap();
        assert!(matches!(
            reg.mark_failable(id),
            Err(Error::UnknownRegion(_))
        ));
        assert!(matches!(
            reg.is_failable(RegionId(99)),
            Err(Error::UnknownRegion(_))
        ));
    }

    #[test]
    fn unmarked_regions_receive_nothing() {
        let mut reg = poisson(1e12, 1);
        let id = reg.register(64);
        let mut data = vec![1.0; 64];
        let ev = reg.advance_clock(3600.0, &mut SliceMemory::new().with(id, &mut data));
        assert!(ev.is_empty());
        assert!(data.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn zero_rate_is_silent() {
        let mut reg = poisson(0.0, 1);
        let id = reg.register(64);
        reg.mark_failable(id).unwrap();
        let mut data = vec![1.0; 64];
        for _ in 0..100 {
            assert!(reg
                .advance_clock(3600.0, &mut SliceMemory::new().with(id, &mut data))
                .is_empty());
        }
        assert_eq!(reg.clock(), 360_000.0);
    }

    #[test]
    fn bit_62_of_one_is_infinity() {
        assert_eq!(1.0f64.to_bits(), 0x3FF0_0000_0000_0000);
        assert_eq!(flip_bit(1.0, 62), f64::INFINITY);
        assert_eq!(flip_bit(1.0, 63), -1.0);
        assert_eq!(flip_bit(flip_bit(3.25, 17), 17), 3.25);
    }

    #[test]
    fn checkpoint_restore_round_trip() {
        let mut reg = poisson(0.0, 0);
        let id = reg.register(8);
        let mut data: Vec<f64> = (0..8).map(f64::from).collect();
        let orig = data.clone();
        assert!(matches!(
            reg.restore(id, &mut data),
            Err(Error::NoCheckpoint(_))
        ));
        reg.checkpoint(id, &data).unwrap();
        data[5] = -999.0;
        reg.restore(id, &mut data).unwrap();
        assert!(crate::sparse::vector::bitwise_eq(&data, &orig));
    }

    #[test]
    fn conditional_restore_skips_without_detections() {
        let mut reg = poisson(0.0, 0);
        let id = reg.register(3);
        let mut data = vec![1.0, 2.0, 3.0];
        reg.checkpoint(id, &data).unwrap();
        data[0] = 7.0; // undetected corruption
        assert!(!reg.restore_if_detected(id, &mut data).unwrap());
        assert_eq!(data[0], 7.0);
    }

    #[test]
    fn conditional_restore_after_detected_flip() {
        let mut reg = FaultRegistry::new(FaultPolicy::poisson(1e9, 3).with_p_detect(1.0)).unwrap();
        let id = reg.register(16);
        let mut data = vec![2.0; 16];
        reg.checkpoint(id, &data).unwrap();
        reg.mark_failable(id).unwrap();
        let ev = reg.advance_clock(1.0, &mut SliceMemory::new().with(id, &mut data));
        assert!(!ev.is_empty());
        assert!(!reg.matches_checkpoint(id, &data).unwrap());
        assert!(reg.restore_if_detected(id, &mut data).unwrap());
        assert!(reg.matches_checkpoint(id, &data).unwrap());
        assert_eq!(reg.detected_in(id).unwrap(), 0);
    }

    #[test]
    fn pattern_cycles() {
        let mut reg = FaultRegistry::new(FaultPolicy::pattern_bits(&[0, 0, 1])).unwrap();
        let hits: Vec<bool> = (0..6).map(|_| reg.consume_pattern().unwrap()).collect();
        assert_eq!(hits, [false, false, true, false, false, true]);
    }

    #[test]
    fn deterministic_fault_adds_one() {
        let mut reg =
            FaultRegistry::new(FaultPolicy::pattern_bits(&[1]).with_p_detect(1.0)).unwrap();
        let mut v = vec![0.5, 2.0];
        assert!(reg.apply_deterministic_fault(&mut v).unwrap());
        assert_eq!(v, vec![1.5, 2.0]);
        let e = reg.log().events().next().unwrap();
        assert_eq!(e.bit, FaultBit::AddOne);
        assert_eq!(reg.totals().detected, 1);
    }

    #[test]
    fn pattern_in_wrong_mode() {
        let mut reg = poisson(1.0, 0);
        assert!(matches!(
            reg.consume_pattern(),
            Err(Error::WrongFaultMode { .. })
        ));
        let mut reg = FaultRegistry::new(FaultPolicy::none()).unwrap();
        assert!(reg.consume_pattern().is_err());
    }

    #[test]
    fn empty_pattern_rejected() {
        assert!(matches!(
            FaultRegistry::new(FaultPolicy::pattern(Vec::new())),
            Err(Error::EmptyPattern)
        ));
    }

    #[test]
    fn detection_extremes() {
        for (p, expect) in [(1.0, true), (0.0, false)] {
            let mut reg =
                FaultRegistry::new(FaultPolicy::poisson(1e9, 9).with_p_detect(p)).unwrap();
            let id = reg.register(32);
            reg.mark_failable(id).unwrap();
            let mut data = vec![0.0; 32];
            let ev = reg.advance_clock(1.0, &mut SliceMemory::new().with(id, &mut data));
            assert!(!ev.is_empty());
            assert!(ev.iter().all(|e| e.detected == expect));
            let t = reg.totals();
            assert_eq!(t.detected, if expect { t.injected } else { 0 });
        }
    }
}
