//! Constant-complexity next reaction method.
//!
//! Absolute event times are hashed into `K` bins of width `W` covering
//! `[lower_bound, lower_bound + K·W)`. Bin `i` holds every stored event with
//! `⌊(time − lower_bound) / W⌋ == i` in an unsorted contiguous array. The
//! next event is the minimum of the first nonempty bin at or after the
//! cursor `min_bin`; since new event times never precede the current time,
//! no bin behind the cursor can become nonempty again.
//!
//! Channels with zero propensity (time +∞) or with a time past the window
//! are not stored, but their time is remembered so they can be activated or
//! re-inserted by a rebuild without resampling. When the cursor runs off the
//! end of the table it is rebuilt at the current time with
//!
//! * `W = 16 × mean step`, the mean step being the average gap since the last
//!   rebuild (≥ 100 steps) or `1/a₀` otherwise, and
//! * `K = ⌈20 √active⌉`, counting only channels with nonzero propensity.
//!
//! With the step-size normalized to one and equal propensities, a selection
//! examines on average `1/W + 1` bins and `W/2 + 1` entries.

use super::{Event, EventSource, Method, QueueCounters};
use crate::error::SimError;
use crate::rng::RngStream;

const UNSTORED: u32 = u32::MAX;

/// Sizing rules for table (re)builds. `None` fields follow the adaptive rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinPolicy {
    /// Fixed bin width in seconds.
    pub width: Option<f64>,
    /// Fixed bin count.
    pub bins: Option<usize>,
    /// `W = width_factor × mean step`.
    pub width_factor: f64,
    /// `K = ⌈bins_factor × √active⌉`.
    pub bins_factor: f64,
    /// Steps needed before the trailing mean step replaces `1/a₀`.
    pub min_steps_for_estimate: u64,
}

impl Default for BinPolicy {
    fn default() -> Self {
        BinPolicy {
            width: None,
            bins: None,
            width_factor: 16.0,
            bins_factor: 20.0,
            min_steps_for_estimate: 100,
        }
    }
}

impl BinPolicy {
    pub fn fixed_width(width: f64) -> Self {
        BinPolicy { width: Some(width), ..Self::default() }
    }

    pub fn bin_count(&self, active: usize) -> usize {
        self.bins
            .unwrap_or_else(|| (self.bins_factor * (active as f64).sqrt()).ceil() as usize)
            .max(1)
    }

    pub fn bin_width(&self, mean_step: f64) -> f64 {
        self.width.unwrap_or(self.width_factor * mean_step)
    }

    /// `W=... K=...` as printed with every run.
    pub fn describe(&self) -> String {
        let w = match self.width {
            Some(w) => format!("{w}"),
            None => format!("{}*mean_step", self.width_factor),
        };
        let k = match self.bins {
            Some(k) => k.to_string(),
            None => format!("ceil({}*sqrt(active))", self.bins_factor),
        };
        format!("W={w} K={k}")
    }
}

/// Work done by one `select_next`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ScanStats {
    pub bins_scanned: u64,
    pub entries_scanned: u64,
    pub rebuilds: u64,
}

#[derive(Debug, Clone)]
pub struct BinnedEventTable {
    policy: BinPolicy,
    lower_bound: f64,
    bin_width: f64,
    bins: Vec<Vec<(f64, u32)>>,
    min_bin: usize,
    /// Per channel: (bin, slot), bin == UNSTORED when not in the table.
    locator: Vec<(u32, u32)>,
    event_time: Vec<f64>,
    propensities: Vec<f64>,
    active: usize,
    stored: usize,
    steps_since_rebuild: u64,
    rebuild_t0: f64,
    moved_entries: u64,
}

impl BinnedEventTable {
    /// Table over `propensities` with the given absolute event times
    /// (+∞ for zero propensity), built at `t0` with `W = width_factor / a₀`.
    pub fn with_times(policy: BinPolicy, propensities: &[f64], times: &[f64], t0: f64) -> Self {
        assert_eq!(propensities.len(), times.len());
        let mut table = BinnedEventTable {
            policy,
            lower_bound: t0,
            bin_width: 1.0,
            bins: Vec::new(),
            min_bin: 0,
            locator: vec![(UNSTORED, 0); times.len()],
            event_time: times.to_vec(),
            propensities: propensities.to_vec(),
            active: propensities.iter().filter(|&&a| a > 0.0).count(),
            stored: 0,
            steps_since_rebuild: 0,
            rebuild_t0: t0,
            moved_entries: 0,
        };
        table.rebuild(t0);
        table
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    pub fn min_bin(&self) -> usize {
        self.min_bin
    }

    pub fn active(&self) -> usize {
        self.active
    }

    pub fn stored(&self) -> usize {
        self.stored
    }

    pub fn bin(&self, i: usize) -> &[(f64, u32)] {
        &self.bins[i]
    }

    pub fn event_time(&self, j: usize) -> f64 {
        self.event_time[j]
    }

    pub fn steps_since_rebuild(&self) -> u64 {
        self.steps_since_rebuild
    }

    pub fn moved_entries(&self) -> u64 {
        self.moved_entries
    }

    /// `(bin, slot)` of channel `j`, or `None` if not stored.
    pub fn location(&self, j: usize) -> Option<(usize, usize)> {
        let (b, s) = self.locator[j];
        (b != UNSTORED).then_some((b as usize, s as usize))
    }

    /// `⌊(time − lower_bound) / W⌋`, or `None` (overflow) at or past the end
    /// of the window. Infinite times always overflow. Times before the window
    /// go to bin 0; see `rebuild_with`.
    #[inline]
    pub fn bin_index(&self, time: f64) -> Option<usize> {
        let idx = ((time - self.lower_bound) / self.bin_width).floor();
        if idx < self.bins.len() as f64 {
            Some(idx.max(0.0) as usize)
        } else {
            None
        }
    }

    fn push(&mut self, j: usize, time: f64) {
        if let Some(b) = self.bin_index(time) {
            let bin = &mut self.bins[b];
            self.locator[j] = (b as u32, bin.len() as u32);
            bin.push((time, j as u32));
            self.stored += 1;
        }
    }

    fn remove(&mut self, j: usize) {
        let (b, s) = self.locator[j];
        debug_assert_ne!(b, UNSTORED);
        let bin = &mut self.bins[b as usize];
        bin.swap_remove(s as usize);
        if let Some(&(_, moved)) = bin.get(s as usize) {
            self.locator[moved as usize].1 = s;
        }
        self.locator[j] = (UNSTORED, 0);
        self.stored -= 1;
    }

    /// Records a new time for an unstored channel and stores it if it falls
    /// inside the window.
    pub fn insert(&mut self, j: usize, time: f64) {
        assert_eq!(self.locator[j].0, UNSTORED, "channel {j} inserted twice");
        self.event_time[j] = time;
        self.push(j, time);
    }

    /// Sets channel `j`'s propensity and absolute event time. Moves it between
    /// bins only when its bin (overflow counting as one) changes.
    pub fn update(&mut self, j: usize, propensity: f64, time: f64) {
        let old = std::mem::replace(&mut self.propensities[j], propensity);
        match (old > 0.0, propensity > 0.0) {
            (false, true) => self.active += 1,
            (true, false) => self.active -= 1,
            _ => {}
        }
        self.event_time[j] = time;
        let new_bin = self.bin_index(time);
        let (b, s) = self.locator[j];
        let old_bin = (b != UNSTORED).then_some(b as usize);
        if old_bin == new_bin {
            if let Some(b) = old_bin {
                self.bins[b][s as usize].0 = time;
            }
            return;
        }
        if old_bin.is_some() {
            self.remove(j);
        }
        self.push(j, time);
        if old_bin.is_some() && new_bin.is_some() {
            self.moved_entries += 1;
        }
    }

    /// Mean step size the next rebuild would use.
    pub fn mean_step_estimate(&self, t_now: f64) -> f64 {
        let steps = self.steps_since_rebuild;
        if steps >= self.policy.min_steps_for_estimate && steps > 0 {
            let est = (t_now - self.rebuild_t0) / steps as f64;
            if est > 0.0 && est.is_finite() {
                return est;
            }
        }
        let a0: f64 = self.propensities.iter().sum();
        if a0 > 0.0 {
            1.0 / a0
        } else {
            1.0
        }
    }

    /// Rebuilds the table at `t_now` with fresh `W` and `K`. Stored times are
    /// kept exactly; nothing is resampled.
    pub fn rebuild(&mut self, t_now: f64) {
        let mean_step = self.mean_step_estimate(t_now);
        let width = self.policy.bin_width(mean_step);
        self.rebuild_with(t_now, width, self.policy.bin_count(self.active));
    }

    fn rebuild_with(&mut self, t_now: f64, width: f64, bins: usize) {
        assert!(width > 0.0 && width.is_finite(), "bin width {width}");
        for bin in &mut self.bins {
            bin.clear();
        }
        self.bins.resize_with(bins, Vec::new);
        self.bins.truncate(bins);
        self.lower_bound = t_now;
        self.bin_width = width;
        self.stored = 0;
        self.locator.fill((UNSTORED, 0));

        let mut earliest = f64::INFINITY;
        for j in 0..self.event_time.len() {
            let t = self.event_time[j];
            if t.is_finite() {
                earliest = earliest.min(t);
                self.push(j, t);
            }
        }
        // Nothing lands in the window: slide it to the earliest pending time.
        // An update before the next selection may then land in
        // [t_now, lower_bound); it is kept in bin 0, which is fully scanned and
        // stays under the cursor until a selection reaches lower_bound.
        if self.stored == 0 && earliest.is_finite() {
            self.lower_bound = earliest;
            for j in 0..self.event_time.len() {
                let t = self.event_time[j];
                if t.is_finite() {
                    self.push(j, t);
                }
            }
        }
        self.min_bin = 0;
        self.steps_since_rebuild = 0;
        self.rebuild_t0 = t_now;
    }

    /// Minimum-time stored event: advance the cursor to the first nonempty bin
    /// (rebuilding at `now` when it passes the last bin) and scan that bin.
    pub fn select_next(&mut self, now: f64) -> Option<(Event, ScanStats)> {
        let mut stats = ScanStats::default();
        if self.active == 0 {
            return None;
        }
        loop {
            let k = self.bins.len();
            while self.min_bin < k && self.bins[self.min_bin].is_empty() {
                self.min_bin += 1;
                stats.bins_scanned += 1;
            }
            if self.min_bin < k {
                break;
            }
            self.rebuild(now);
            stats.rebuilds += 1;
            if self.stored == 0 {
                return None;
            }
        }
        stats.bins_scanned += 1;
        let bin = &self.bins[self.min_bin];
        stats.entries_scanned += bin.len() as u64;
        let mut best = bin[0];
        for &entry in &bin[1..] {
            if entry.0 < best.0 {
                best = entry;
            }
        }
        self.steps_since_rebuild += 1;
        Some((Event { time: best.0, channel: best.1 as usize }, stats))
    }

    /// Checks every table invariant; used by tests and the `validate` command.
    pub fn audit(&self) -> Result<(), String> {
        let mut count = 0;
        for (b, bin) in self.bins.iter().enumerate() {
            if b < self.min_bin && !bin.is_empty() {
                return Err(format!("bin {b} behind cursor {} is nonempty", self.min_bin));
            }
            for (s, &(t, j)) in bin.iter().enumerate() {
                let j = j as usize;
                if self.bin_index(t) != Some(b) {
                    return Err(format!("channel {j} time {t} misplaced in bin {b}"));
                }
                let lo = self.lower_bound + b as f64 * self.bin_width;
                let hi = self.lower_bound + (b + 1) as f64 * self.bin_width;
                let slack = 1e-12 * hi.abs().max(1.0);
                let early = b == 0 && self.min_bin == 0 && t < lo;
                if (t < lo - slack && !early) || t >= hi + slack {
                    return Err(format!("channel {j} time {t} outside [{lo}, {hi})"));
                }
                if self.locator[j] != (b as u32, s as u32) {
                    return Err(format!("locator of channel {j} is stale"));
                }
                if self.event_time[j] != t {
                    return Err(format!("channel {j} stored time differs from event time"));
                }
                count += 1;
            }
        }
        if count != self.stored {
            return Err(format!("stored counter {} but {count} entries", self.stored));
        }
        let mut active = 0;
        for j in 0..self.event_time.len() {
            let a = self.propensities[j];
            let t = self.event_time[j];
            active += (a > 0.0) as usize;
            let should_store = a > 0.0 && t.is_finite() && self.bin_index(t).is_some();
            let stored = self.locator[j].0 != UNSTORED;
            if should_store != stored {
                return Err(format!("channel {j} (a={a}, t={t}) stored={stored}"));
            }
            if (a > 0.0) != t.is_finite() {
                return Err(format!("channel {j} has a={a} but time {t}"));
            }
        }
        if active != self.active {
            return Err(format!("active counter {} but {active} active", self.active));
        }
        Ok(())
    }
}

/// Next reaction method over a [`BinnedEventTable`]; every affected channel
/// gets a fresh exponential time.
#[derive(Debug)]
pub struct BinnedNrm {
    policy: BinPolicy,
    table: Option<BinnedEventTable>,
    sum: f64,
    counters: QueueCounters,
}

impl BinnedNrm {
    pub fn new(policy: BinPolicy) -> Self {
        BinnedNrm { policy, table: None, sum: 0.0, counters: QueueCounters::default() }
    }

    pub fn table(&self) -> &BinnedEventTable {
        self.table.as_ref().expect("initialized")
    }

    fn table_mut(&mut self) -> &mut BinnedEventTable {
        self.table.as_mut().expect("initialized")
    }
}

impl EventSource for BinnedNrm {
    fn method(&self) -> Method {
        Method::NrmBins
    }

    fn initialize(&mut self, propensities: &[f64], t0: f64, rng: &mut RngStream) {
        let times: Vec<f64> = propensities.iter().map(|&a| t0 + rng.exponential(a)).collect();
        self.sum = propensities.iter().sum();
        self.table = Some(BinnedEventTable::with_times(self.policy, propensities, &times, t0));
    }

    fn next_event(&mut self, now: f64, _rng: &mut RngStream) -> Result<Option<Event>, SimError> {
        let Some((event, stats)) = self.table_mut().select_next(now) else {
            return Ok(None);
        };
        self.counters.selections += 1;
        self.counters.bins_scanned += stats.bins_scanned;
        self.counters.entries_scanned += stats.entries_scanned;
        self.counters.rebuilds += stats.rebuilds;
        Ok(Some(event))
    }

    fn update(&mut self, channel: usize, propensity: f64, now: f64, rng: &mut RngStream) {
        self.counters.updates += 1;
        let time = now + rng.exponential(propensity);
        let table = self.table.as_mut().expect("initialized");
        self.sum += propensity - table.propensities[channel];
        let before = table.moved_entries;
        table.update(channel, propensity, time);
        self.counters.moved_entries += table.moved_entries - before;
    }

    fn resync(&mut self) {
        self.sum = self.table().propensities.iter().sum();
    }

    fn total_propensity(&self) -> f64 {
        self.sum
    }

    fn counters(&self) -> &QueueCounters {
        &self.counters
    }

    fn reset_counters(&mut self) {
        self.counters = QueueCounters::default();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_with(lower: f64, width: f64, bins: usize, n: usize) -> BinnedEventTable {
        let policy = BinPolicy { width: Some(width), bins: Some(bins), ..BinPolicy::default() };
        BinnedEventTable::with_times(policy, &vec![0.0; n], &vec![f64::INFINITY; n], lower)
    }

    #[test]
    fn bin_index_examples() {
        let t = table_with(10.0, 0.5, 40, 1);
        assert_eq!(t.bin_index(10.0), Some(0));
        assert_eq!(t.bin_index(12.25), Some(4));
        assert_eq!(t.bin_index(30.1), None);
        assert_eq!(t.bin_index(29.99), Some(39));
        assert_eq!(t.bin_index(f64::INFINITY), None);
    }

    #[test]
    fn insert_records_and_places() {
        let mut t = table_with(0.0, 1.0, 10, 3);
        t.update(0, 1.0, 3.5);
        assert_eq!(t.location(0), Some((3, 0)));
        t.update(1, 1.0, 3.2);
        assert_eq!(t.location(1), Some((3, 1)));
        assert_eq!(t.bin(3).len(), 2);
        t.insert(2, f64::INFINITY);
        assert_eq!(t.location(2), None);
        assert_eq!(t.event_time(2), f64::INFINITY);
        t.audit().unwrap();
    }

    #[test]
    #[should_panic(expected = "inserted twice")]
    fn double_insert_panics() {
        let mut t = table_with(0.0, 1.0, 10, 1);
        t.update(0, 1.0, 2.5);
        t.insert(0, 2.5);
    }

    #[test]
    fn select_walks_forward_through_bins() {
        // bins: {R1 @ 0.4}, {}, {R7 @ 2.5, R3 @ 2.1}
        let mut t = table_with(0.0, 1.0, 3, 8);
        t.update(1, 1.0, 0.4);
        t.update(7, 1.0, 2.5);
        t.update(3, 1.0, 2.1);
        let (ev, stats) = t.select_next(0.0).unwrap();
        assert_eq!((ev.time, ev.channel), (0.4, 1));
        assert_eq!(stats, ScanStats { bins_scanned: 1, entries_scanned: 1, rebuilds: 0 });
        // R1 fires and goes dormant
        t.update(1, 0.0, f64::INFINITY);
        let (ev, stats) = t.select_next(0.4).unwrap();
        assert_eq!((ev.time, ev.channel), (2.1, 3));
        assert_eq!(stats.bins_scanned, 3);
        assert_eq!(stats.entries_scanned, 2);
        assert_eq!(t.min_bin(), 2);
        t.audit().unwrap();
    }

    #[test]
    fn same_bin_update_overwrites_in_place() {
        let mut t = table_with(0.0, 1.0, 5, 2);
        t.update(0, 1.0, 2.2);
        t.update(1, 1.0, 2.4);
        t.update(0, 1.0, 2.7);
        assert_eq!(t.location(0), Some((2, 0)));
        assert_eq!(t.bin(2)[0], (2.7, 0));
        assert_eq!(t.moved_entries(), 0);
        // to overflow: removed, swapped entry's locator fixed
        t.update(0, 1.0, 9.0);
        assert_eq!(t.location(0), None);
        assert_eq!(t.location(1), Some((2, 0)));
        assert_eq!(t.event_time(0), 9.0);
        t.audit().unwrap();
    }

    #[test]
    fn activation_from_zero() {
        let mut t = table_with(0.0, 1.0, 5, 1);
        assert_eq!(t.active(), 0);
        t.update(0, 2.0, 1.5);
        assert_eq!(t.location(0), Some((1, 0)));
        assert_eq!(t.active(), 1);
        t.audit().unwrap();
    }

    #[test]
    fn exhausted_window_forces_rebuild() {
        let policy = BinPolicy { width: Some(1.0), bins: Some(4), ..BinPolicy::default() };
        let mut t = BinnedEventTable::with_times(policy, &[1.0], &[0.5], 0.0);
        t.update(0, 1.0, 100.0);
        assert_eq!(t.stored(), 0);
        let (ev, stats) = t.select_next(0.0).unwrap();
        assert_eq!((ev.time, ev.channel), (100.0, 0));
        assert_eq!(stats.rebuilds, 1);
        t.audit().unwrap();
    }

    #[test]
    fn rebuild_sizes_follow_policy() {
        // 400 active channels with sum 8: K = 20·√400 = 400, W = 16/8 = 2
        let props = vec![0.02; 400];
        let times: Vec<f64> = (0..400).map(|i| 0.01 * i as f64).collect();
        let t = BinnedEventTable::with_times(BinPolicy::default(), &props, &times, 0.0);
        assert_eq!(t.bin_count(), 400);
        assert!((t.bin_width() - 2.0).abs() < 1e-12);

        let t = BinnedEventTable::with_times(BinPolicy::default(), &[0.5], &[1.0], 0.0);
        assert_eq!(t.bin_count(), 20);
        assert_eq!(t.bin_width(), 32.0);
        t.audit().unwrap();
    }

    #[test]
    fn rebuild_uses_trailing_mean_step() {
        let props = vec![1.0; 50];
        let times: Vec<f64> = (0..50).map(|i| 10.0 + 0.1 * i as f64).collect();
        let mut t = BinnedEventTable::with_times(BinPolicy::default(), &props, &times, 0.0);
        t.steps_since_rebuild = 250;
        t.rebuild(5.0);
        assert_eq!(t.bin_width(), 16.0 * (5.0 / 250.0));
        assert_eq!(t.bin_count(), (20.0 * 50f64.sqrt()).ceil() as usize);
        assert_eq!(t.lower_bound(), 5.0);
        // too few steps: fall back to 1/a0
        t.steps_since_rebuild = 99;
        t.rebuild(6.0);
        assert_eq!(t.bin_width(), 16.0 / 50.0);
        t.audit().unwrap();
    }

    #[test]
    fn update_before_slid_window_stays_selectable() {
        let policy = BinPolicy { width: Some(0.01), ..BinPolicy::default() };
        let mut t = BinnedEventTable::with_times(policy, &[1.0, 1.0], &[50.0, 60.0], 0.0);
        assert_eq!(t.lower_bound(), 50.0);
        t.update(1, 1.0, 10.0);
        t.audit().unwrap();
        assert_eq!(t.select_next(0.0).unwrap().0, Event { time: 10.0, channel: 1 });
        t.audit().unwrap();
    }
}
