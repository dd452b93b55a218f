//! Composition-rejection direct method: channels grouped by the binary
//! exponent of their propensity, an exact linear search over group sums,
//! then rejection sampling inside the chosen group.

use super::{Event, EventSource, Method, QueueCounters};
use crate::error::SimError;
use crate::rng::RngStream;

/// Exponent range covered: every positive finite f64 (subnormals included).
const MIN_EXP: i32 = -1075;
const MAX_EXP: i32 = 1024;

/// Trials after which selection is declared broken.
pub const MAX_TRIALS: u32 = 10_000;

const UNSTORED: u32 = u32::MAX;

/// `⌊log₂ a⌋` for positive finite `a`, exact at powers of two.
#[inline]
pub fn exponent_group(a: f64) -> i32 {
    debug_assert!(a > 0.0 && a.is_finite());
    let bits = a.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    if biased != 0 {
        biased - 1023
    } else {
        // subnormal: value = mantissa * 2^-1074
        let mantissa = bits & ((1u64 << 52) - 1);
        63 - mantissa.leading_zeros() as i32 - 1074
    }
}

#[inline]
fn pow2(g: i32) -> f64 {
    2f64.powi(g)
}

#[derive(Debug, Clone, Default)]
struct Group {
    members: Vec<u32>,
    sum: f64,
    /// Position in `active_groups`, or `UNSTORED`.
    active_slot: u32,
}

/// Result of one composition-rejection draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrPick {
    pub index: usize,
    pub trials: u32,
    pub groups_scanned: usize,
    pub clamped: bool,
}

#[derive(Debug, Clone, Default)]
pub struct CompositionRejectionTable {
    propensities: Vec<f64>,
    groups: Vec<Group>,
    /// Exponents of nonempty groups, in activation order.
    active_groups: Vec<i32>,
    /// Per channel: (group exponent, slot) or slot == UNSTORED.
    locator: Vec<(i32, u32)>,
    total: f64,
    active: usize,
}

impl CompositionRejectionTable {
    pub fn new(propensities: &[f64]) -> Self {
        let mut table = CompositionRejectionTable {
            propensities: vec![0.0; propensities.len()],
            groups: vec![Group { active_slot: UNSTORED, ..Group::default() }; (MAX_EXP - MIN_EXP + 1) as usize],
            active_groups: Vec::new(),
            locator: vec![(0, UNSTORED); propensities.len()],
            total: 0.0,
            active: 0,
        };
        for (j, &a) in propensities.iter().enumerate() {
            table.set(j, a);
        }
        table.recompute_sums();
        table
    }

    #[inline]
    fn group_mut(&mut self, g: i32) -> &mut Group {
        &mut self.groups[(g - MIN_EXP) as usize]
    }

    #[inline]
    fn group(&self, g: i32) -> &Group {
        &self.groups[(g - MIN_EXP) as usize]
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn active(&self) -> usize {
        self.active
    }

    /// Group exponent of channel `j`, or `None` when its propensity is zero.
    pub fn group_of(&self, j: usize) -> Option<i32> {
        let (g, slot) = self.locator[j];
        (slot != UNSTORED).then_some(g)
    }

    pub fn group_sum(&self, g: i32) -> f64 {
        self.group(g).sum
    }

    pub fn group_len(&self, g: i32) -> usize {
        self.group(g).members.len()
    }

    pub fn active_group_count(&self) -> usize {
        self.active_groups.len()
    }

    /// Moves channel `j` to the group of `value` (or out of all groups when
    /// zero), fixing sums and the locator of any swapped member.
    pub fn set(&mut self, j: usize, value: f64) {
        let old = self.propensities[j];
        let (old_g, old_slot) = self.locator[j];
        let new_g = (value > 0.0).then(|| exponent_group(value));
        self.propensities[j] = value;

        if old_slot != UNSTORED && Some(old_g) == new_g {
            self.group_mut(old_g).sum += value - old;
            self.total += value - old;
            return;
        }
        if old_slot != UNSTORED {
            self.remove(j, old_g, old_slot, old);
        }
        if let Some(g) = new_g {
            self.insert(j, g, value);
        }
        if self.active == 0 {
            self.total = 0.0;
        }
    }

    fn remove(&mut self, j: usize, g: i32, slot: u32, old: f64) {
        let group = self.group_mut(g);
        group.members.swap_remove(slot as usize);
        let moved = group.members.get(slot as usize).copied();
        let emptied = group.members.is_empty();
        if emptied {
            group.sum = 0.0;
        } else {
            group.sum -= old;
        }
        if let Some(m) = moved {
            self.locator[m as usize].1 = slot;
        }
        if emptied {
            let pos = self.group(g).active_slot as usize;
            self.active_groups.swap_remove(pos);
            if let Some(&h) = self.active_groups.get(pos) {
                self.group_mut(h).active_slot = pos as u32;
            }
            self.group_mut(g).active_slot = UNSTORED;
        }
        self.locator[j] = (0, UNSTORED);
        self.total -= old;
        self.active -= 1;
    }

    fn insert(&mut self, j: usize, g: i32, value: f64) {
        if self.group(g).active_slot == UNSTORED {
            let pos = self.active_groups.len() as u32;
            self.active_groups.push(g);
            self.group_mut(g).active_slot = pos;
        }
        let group = self.group_mut(g);
        group.members.push(j as u32);
        group.sum += value;
        let slot = group.members.len() as u32 - 1;
        self.locator[j] = (g, slot);
        self.total += value;
        self.active += 1;
    }

    pub fn recompute_sums(&mut self) {
        let mut total = 0.0;
        for &g in &self.active_groups {
            let group = &self.groups[(g - MIN_EXP) as usize];
            let s: f64 = group.members.iter().map(|&m| self.propensities[m as usize]).sum();
            self.groups[(g - MIN_EXP) as usize].sum = s;
            total += s;
        }
        self.total = total;
    }

    /// Exact draw with law `a_j / a₀`. `None` if nothing is active.
    pub fn select(&self, rng: &mut RngStream) -> Result<Option<CrPick>, SimError> {
        if self.active == 0 {
            return Ok(None);
        }
        let r = rng.uniform_half_open() * self.total;
        let mut acc = 0.0;
        let mut chosen = None;
        let mut scanned = 0;
        for &g in &self.active_groups {
            scanned += 1;
            acc += self.group(g).sum;
            if acc > r {
                chosen = Some(g);
                break;
            }
        }
        let clamped = chosen.is_none();
        let g = chosen.unwrap_or(*self.active_groups.last().expect("active group"));
        let members = &self.group(g).members;
        let ceiling = pow2(g + 1);
        for trial in 1..=MAX_TRIALS {
            let j = members[rng.below(members.len())] as usize;
            if rng.uniform_half_open() * ceiling < self.propensities[j] {
                return Ok(Some(CrPick { index: j, trials: trial, groups_scanned: scanned, clamped }));
            }
        }
        Err(SimError::Corrupted(format!(
            "composition-rejection group {g} rejected {MAX_TRIALS} trials"
        )))
    }

    /// Checks group membership, locator consistency and sums.
    pub fn audit(&self) -> Result<(), String> {
        let mut seen = 0;
        for (j, &a) in self.propensities.iter().enumerate() {
            let (g, slot) = self.locator[j];
            if a > 0.0 {
                if slot == UNSTORED {
                    return Err(format!("channel {j} with a={a} not stored"));
                }
                if g != exponent_group(a) {
                    return Err(format!("channel {j} in group {g}, expected {}", exponent_group(a)));
                }
                if self.group(g).members.get(slot as usize) != Some(&(j as u32)) {
                    return Err(format!("locator of channel {j} is stale"));
                }
                seen += 1;
            } else if slot != UNSTORED {
                return Err(format!("zero-propensity channel {j} is stored"));
            }
        }
        if seen != self.active {
            return Err(format!("active count {} but {seen} stored", self.active));
        }
        for (pos, &g) in self.active_groups.iter().enumerate() {
            let group = self.group(g);
            if group.members.is_empty() || group.active_slot as usize != pos {
                return Err(format!("active group list broken at {g}"));
            }
            let s: f64 = group.members.iter().map(|&m| self.propensities[m as usize]).sum();
            if (s - group.sum).abs() > 1e-9 * s.max(f64::MIN_POSITIVE) {
                return Err(format!("group {g} sum {} vs recomputed {s}", group.sum));
            }
        }
        Ok(())
    }
}

/// Composition-rejection direct method.
#[derive(Debug, Default)]
pub struct CompositionRejection {
    table: CompositionRejectionTable,
    counters: QueueCounters,
}

impl CompositionRejection {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn table(&self) -> &CompositionRejectionTable {
        &self.table
    }
}

impl EventSource for CompositionRejection {
    fn method(&self) -> Method {
        Method::CompositionRejection
    }

    fn initialize(&mut self, propensities: &[f64], _t0: f64, _rng: &mut RngStream) {
        self.table = CompositionRejectionTable::new(propensities);
    }

    fn next_event(&mut self, now: f64, rng: &mut RngStream) -> Result<Option<Event>, SimError> {
        if self.table.active == 0 {
            return Ok(None);
        }
        let tau = rng.exponential(self.table.total);
        let Some(pick) = self.table.select(rng)? else {
            return Ok(None);
        };
        self.counters.selections += 1;
        self.counters.rejections += (pick.trials - 1) as u64;
        self.counters.bins_scanned += pick.groups_scanned as u64;
        self.counters.clamps += pick.clamped as u64;
        Ok(Some(Event { time: now + tau, channel: pick.index }))
    }

    fn update(&mut self, channel: usize, propensity: f64, _now: f64, _rng: &mut RngStream) {
        self.counters.updates += 1;
        self.table.set(channel, propensity);
    }

    fn resync(&mut self) {
        self.table.recompute_sums();
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
