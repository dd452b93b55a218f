//! Direct method with a 2-level (√M groups of √M) or 3-level (∛M) search.
//! Channels are partitioned statically into contiguous groups.

use super::direct::linear_select;
use super::{Event, EventSource, Method, QueueCounters};
use crate::error::SimError;
use crate::rng::RngStream;

/// Smallest `g` with `g^depth >= m`.
fn group_size(m: usize, depth: u32) -> usize {
    let mut g = (m as f64).powf(1.0 / depth as f64).round().max(1.0) as usize;
    while g.pow(depth) < m {
        g += 1;
    }
    while g > 1 && (g - 1).pow(depth) >= m {
        g -= 1;
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupedPick {
    pub index: usize,
    /// Group (and super-group) entries examined.
    pub group_scans: usize,
    /// Channels examined inside the chosen group.
    pub entry_scans: usize,
    /// Longest single prefix scan over all levels.
    pub max_level_scan: usize,
    pub clamps: usize,
}

/// Propensities partitioned into contiguous groups with cached sums.
#[derive(Debug, Clone, Default)]
pub struct GroupedTable {
    depth: u32,
    group_size: usize,
    propensities: Vec<f64>,
    group_sums: Vec<f64>,
    group_active: Vec<u32>,
    super_sums: Vec<f64>,
    super_active: Vec<u32>,
    total: f64,
    active: usize,
}

impl GroupedTable {
    pub fn new(depth: u32, propensities: &[f64]) -> Self {
        assert!(depth == 2 || depth == 3, "grouped search depth must be 2 or 3");
        let m = propensities.len().max(1);
        let g = group_size(m, depth);
        let n_groups = m.div_ceil(g);
        let n_super = if depth == 3 { n_groups.div_ceil(g) } else { 0 };
        let mut table = GroupedTable {
            depth,
            group_size: g,
            propensities: propensities.to_vec(),
            group_sums: vec![0.0; n_groups],
            group_active: vec![0; n_groups],
            super_sums: vec![0.0; n_super],
            super_active: vec![0; n_super],
            total: 0.0,
            active: 0,
        };
        table.recompute();
        table
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn group_sums(&self) -> &[f64] {
        &self.group_sums
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn active(&self) -> usize {
        self.active
    }

    fn group_range(&self, group: usize) -> std::ops::Range<usize> {
        let start = group * self.group_size;
        start..(start + self.group_size).min(self.propensities.len())
    }

    fn super_range(&self, sup: usize) -> std::ops::Range<usize> {
        let start = sup * self.group_size;
        start..(start + self.group_size).min(self.group_sums.len())
    }

    /// Recomputes every cached sum from the channel propensities.
    pub fn recompute(&mut self) {
        for group in 0..self.group_sums.len() {
            let range = self.group_range(group);
            let members = &self.propensities[range];
            self.group_sums[group] = members.iter().sum();
            self.group_active[group] = members.iter().filter(|&&a| a > 0.0).count() as u32;
        }
        for sup in 0..self.super_sums.len() {
            let range = self.super_range(sup);
            self.super_sums[sup] = self.group_sums[range.clone()].iter().sum();
            self.super_active[sup] = self.group_active[range].iter().sum();
        }
        self.total = self.group_sums.iter().sum();
        self.active = self.group_active.iter().map(|&c| c as usize).sum();
    }

    pub fn set(&mut self, channel: usize, value: f64) {
        let old = std::mem::replace(&mut self.propensities[channel], value);
        let delta = match (old > 0.0, value > 0.0) {
            (false, true) => 1i32,
            (true, false) => -1,
            _ => 0,
        };
        let group = channel / self.group_size;
        adjust(&mut self.group_sums[group], &mut self.group_active[group], value - old, delta);
        if self.depth == 3 {
            let sup = group / self.group_size;
            adjust(&mut self.super_sums[sup], &mut self.super_active[sup], value - old, delta);
        }
        self.active = (self.active as i64 + delta as i64) as usize;
        if self.active == 0 {
            self.total = 0.0;
        } else {
            self.total += value - old;
        }
    }

    /// Draws a channel with probability `a_j / a₀` using one uniform per level.
    /// Returns `None` when every propensity is zero.
    pub fn select(&self, rng: &mut RngStream) -> Option<GroupedPick> {
        if self.active == 0 {
            return None;
        }
        let mut pick = GroupedPick {
            index: 0,
            group_scans: 0,
            entry_scans: 0,
            max_level_scan: 0,
            clamps: 0,
        };
        let groups = if self.depth == 3 {
            let s = linear_select(&self.super_sums, rng.uniform_half_open() * self.total)?;
            pick.record_group(s.scanned, s.clamped);
            let range = self.super_range(s.index);
            let r = rng.uniform_half_open() * self.super_sums[s.index];
            let g = linear_select(&self.group_sums[range.clone()], r)?;
            pick.record_group(g.scanned, g.clamped);
            range.start + g.index
        } else {
            let g = linear_select(&self.group_sums, rng.uniform_half_open() * self.total)?;
            pick.record_group(g.scanned, g.clamped);
            g.index
        };
        let range = self.group_range(groups);
        let r = rng.uniform_half_open() * self.group_sums[groups];
        let e = linear_select(&self.propensities[range.clone()], r)?;
        pick.entry_scans = e.scanned;
        pick.max_level_scan = pick.max_level_scan.max(e.scanned);
        pick.clamps += e.clamped as usize;
        pick.index = range.start + e.index;
        Some(pick)
    }
}

impl GroupedPick {
    fn record_group(&mut self, scanned: usize, clamped: bool) {
        self.group_scans += scanned;
        self.max_level_scan = self.max_level_scan.max(scanned);
        self.clamps += clamped as usize;
    }
}

fn adjust(sum: &mut f64, active: &mut u32, diff: f64, delta: i32) {
    *active = (*active as i32 + delta) as u32;
    if *active == 0 {
        *sum = 0.0;
    } else {
        *sum += diff;
    }
}

/// Direct method over a [`GroupedTable`].
#[derive(Debug)]
pub struct GroupedDirect {
    depth: u32,
    table: GroupedTable,
    counters: QueueCounters,
}

impl GroupedDirect {
    pub fn new(depth: u32) -> Self {
        assert!(depth == 2 || depth == 3);
        GroupedDirect { depth, table: GroupedTable::default(), counters: QueueCounters::default() }
    }

    pub fn table(&self) -> &GroupedTable {
        &self.table
    }
}

impl EventSource for GroupedDirect {
    fn method(&self) -> Method {
        if self.depth == 2 {
            Method::Direct2d
        } else {
            Method::Direct3d
        }
    }

    fn initialize(&mut self, propensities: &[f64], _t0: f64, _rng: &mut RngStream) {
        self.table = GroupedTable::new(self.depth, propensities);
    }

    fn next_event(&mut self, now: f64, rng: &mut RngStream) -> Result<Option<Event>, SimError> {
        if self.table.active == 0 {
            return Ok(None);
        }
        let tau = rng.exponential(self.table.total);
        let pick = self
            .table
            .select(rng)
            .ok_or_else(|| SimError::Corrupted("grouped table has active count but no mass".into()))?;
        self.counters.selections += 1;
        self.counters.bins_scanned += pick.group_scans as u64;
        self.counters.entries_scanned += pick.entry_scans as u64;
        self.counters.clamps += pick.clamps as u64;
        Ok(Some(Event { time: now + tau, channel: pick.index }))
    }

    fn update(&mut self, channel: usize, propensity: f64, _now: f64, _rng: &mut RngStream) {
        self.counters.updates += 1;
        self.table.set(channel, propensity);
    }

    fn resync(&mut self) {
        self.table.recompute();
    }

    fn total_propensity(&self) -> f64 {
        self.table.total
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

    #[test]
    fn integer_roots() {
        assert_eq!(group_size(9, 2), 3);
        assert_eq!(group_size(10, 2), 4);
        assert_eq!(group_size(27, 3), 3);
        assert_eq!(group_size(28, 3), 4);
        assert_eq!(group_size(1, 3), 1);
        assert_eq!(group_size(1_000_000, 2), 1000);
        assert_eq!(group_size(1_000_000, 3), 100);
    }

    #[test]
    fn group_choice_follows_group_sums() {
        // two groups with sums (3, 1): r = 3.5 lands in the second
        assert_eq!(linear_select(&[3.0, 1.0], 3.5).unwrap().index, 1);
    }

    #[test]
    fn nine_equal_channels_scan_at_most_three_per_level() {
        let t = GroupedTable::new(2, &[1.0; 9]);
        assert_eq!(t.group_size(), 3);
        let mut rng = RngStream::new(2);
        let worst = (0..10_000).map(|_| t.select(&mut rng).unwrap().max_level_scan).max().unwrap();
        assert_eq!(worst, 3);
    }

    #[test]
    fn four_equal_channels_uniform_in_two_groups() {
        let t = GroupedTable::new(2, &[1.0; 4]);
        assert_eq!(t.group_sums(), &[2.0, 2.0]);
        let mut rng = RngStream::new(9);
        let n = 100_000;
        let mut hits = [0usize; 4];
        for _ in 0..n {
            hits[t.select(&mut rng).unwrap().index] += 1;
        }
        for h in hits {
            assert!((h as f64 / n as f64 - 0.25).abs() < 0.005, "{hits:?}");
        }
    }

    #[test]
    fn incremental_sums_track_recomputation() {
        let mut rng = RngStream::new(4);
        for depth in [2, 3] {
            let init: Vec<f64> = (0..50).map(|i| (i % 7) as f64 * 0.3).collect();
            let mut t = GroupedTable::new(depth, &init);
            for _ in 0..5000 {
                let j = rng.below(50);
                let v = if rng.uniform() < 0.2 { 0.0 } else { rng.uniform() * 10.0 };
                t.set(j, v);
            }
            let mut fresh = t.clone();
            fresh.recompute();
            for (a, b) in t.group_sums.iter().zip(&fresh.group_sums) {
                assert!((a - b).abs() <= 1e-9 * fresh.total);
            }
            assert_eq!(t.group_active, fresh.group_active);
            assert_eq!(t.active, fresh.active);
        }
    }

    #[test]
    fn depth_three_covers_ragged_tail() {
        // 10 channels, g = 3: groups of 3,3,3,1 and super-groups of 3 groups, then 1
        let mut vals = vec![0.0; 10];
        vals[9] = 1.0;
        let t = GroupedTable::new(3, &vals);
        let mut rng = RngStream::new(1);
        assert_eq!(t.select(&mut rng).unwrap().index, 9);
    }
}
