//! Next subvolume method.
//!
//! A binary min-heap holds one next-event time per subvolume. The firing
//! subvolume's event is chosen by a single uniform scaled to its total rate:
//! first the reaction block versus the diffusion block, then a linear search
//! within the chosen block. After a step only the subvolumes touched by the
//! updates (at most two) get a new time, so the heap sees at most two key
//! changes per step.

use std::sync::Arc;

use super::SubvolumeLayout;
use crate::error::SimError;
use crate::queues::direct::linear_select;
use crate::queues::{BinaryMinHeap, Event, EventSource, Method, QueueCounters};
use crate::rng::RngStream;

#[derive(Debug)]
pub struct NsmQueue {
    layout: Option<Arc<SubvolumeLayout>>,
    fixed_layout: bool,
    propensities: Vec<f64>,
    reaction_sums: Vec<f64>,
    diffusion_sums: Vec<f64>,
    heap: BinaryMinHeap,
    dirty: Vec<u32>,
    is_dirty: Vec<bool>,
    total: f64,
    swaps_reported: u64,
    heap_updates_last_step: usize,
    max_heap_updates_per_step: usize,
    counters: QueueCounters,
}

impl NsmQueue {
    pub fn new(layout: Arc<SubvolumeLayout>) -> Self {
        Self::with_layout(Some(layout))
    }

    /// Whole network treated as a single subvolume with reactions only.
    pub fn well_mixed() -> Self {
        Self::with_layout(None)
    }

    fn with_layout(layout: Option<Arc<SubvolumeLayout>>) -> Self {
        NsmQueue {
            fixed_layout: layout.is_some(),
            layout,
            propensities: Vec::new(),
            reaction_sums: Vec::new(),
            diffusion_sums: Vec::new(),
            heap: BinaryMinHeap::default(),
            dirty: Vec::new(),
            is_dirty: Vec::new(),
            total: 0.0,
            swaps_reported: 0,
            heap_updates_last_step: 0,
            max_heap_updates_per_step: 0,
            counters: QueueCounters::default(),
        }
    }

    fn layout(&self) -> &SubvolumeLayout {
        self.layout.as_deref().expect("initialized")
    }

    pub fn subvolume_sums(&self, v: usize) -> (f64, f64) {
        (self.reaction_sums[v], self.diffusion_sums[v])
    }

    pub fn subvolume_time(&self, v: usize) -> f64 {
        self.heap.time_of(v)
    }

    /// Largest number of heap key changes made by one step so far.
    pub fn max_heap_updates_per_step(&self) -> usize {
        self.max_heap_updates_per_step
    }

    fn block_sums(&self, v: usize) -> (f64, f64) {
        let layout = self.layout();
        let start = v * layout.stride;
        let split = start + layout.reactions;
        let end = start + layout.stride;
        (
            self.propensities[start..split].iter().sum(),
            self.propensities[split..end].iter().sum(),
        )
    }

    /// Checks cached sums against recomputation and heap consistency.
    pub fn audit(&self) -> Result<(), String> {
        self.heap.audit()?;
        for v in 0..self.layout().subvolumes {
            let (r, d) = self.block_sums(v);
            let (cr, cd) = self.subvolume_sums(v);
            if (r - cr).abs() > 1e-9 * r.max(1e-300) || (d - cd).abs() > 1e-9 * d.max(1e-300) {
                return Err(format!("subvolume {v} sums ({cr}, {cd}) vs recomputed ({r}, {d})"));
            }
            if (r + d > 0.0) != self.heap.time_of(v).is_finite() {
                return Err(format!("subvolume {v} time inconsistent with its rate"));
            }
        }
        Ok(())
    }
}

impl EventSource for NsmQueue {
    fn method(&self) -> Method {
        Method::Nsm
    }

    fn initialize(&mut self, propensities: &[f64], t0: f64, rng: &mut RngStream) {
        if !self.fixed_layout {
            self.layout = Some(Arc::new(SubvolumeLayout::well_mixed(propensities.len())));
        }
        let layout = *self.layout();
        assert_eq!(layout.channel_count(), propensities.len(), "layout does not match network");
        self.propensities = propensities.to_vec();
        let n = layout.subvolumes;
        self.reaction_sums = vec![0.0; n];
        self.diffusion_sums = vec![0.0; n];
        let mut times = Vec::with_capacity(n);
        for v in 0..n {
            let (r, d) = self.block_sums(v);
            self.reaction_sums[v] = r;
            self.diffusion_sums[v] = d;
            times.push(t0 + rng.exponential(r + d));
        }
        self.total = self.reaction_sums.iter().chain(&self.diffusion_sums).sum();
        self.heap = BinaryMinHeap::from_times(&times);
        self.is_dirty = vec![false; n];
        self.dirty.clear();
        self.swaps_reported = 0;
    }

    fn next_event(&mut self, _now: f64, rng: &mut RngStream) -> Result<Option<Event>, SimError> {
        let Some((time, v)) = self.heap.peek() else { return Ok(None) };
        if !time.is_finite() {
            return Ok(None);
        }
        let layout = *self.layout();
        let (rs, ds) = (self.reaction_sums[v], self.diffusion_sums[v]);
        let r = rng.uniform_half_open() * (rs + ds);
        let start = v * layout.stride;
        let split = start + layout.reactions;
        let end = start + layout.stride;
        let pick = if r < rs {
            linear_select(&self.propensities[start..split], r).map(|s| (start, s))
        } else {
            None
        };
        let (base, sel) = match pick {
            Some(p) => p,
            None => match linear_select(&self.propensities[split..end], r - rs) {
                Some(s) => (split, s),
                // reaction block chosen by rounding only
                None => (start, linear_select(&self.propensities[start..split], r).ok_or_else(|| {
                    SimError::Corrupted(format!("subvolume {v} has a finite time but no active channel"))
                })?),
            },
        };
        self.counters.selections += 1;
        self.counters.bins_scanned += 1;
        self.counters.entries_scanned += sel.scanned as u64;
        self.counters.clamps += sel.clamped as u64;
        Ok(Some(Event { time, channel: base + sel.index }))
    }

    fn update(&mut self, channel: usize, propensity: f64, _now: f64, _rng: &mut RngStream) {
        self.counters.updates += 1;
        self.propensities[channel] = propensity;
        let v = self.layout().subvolume_of(channel);
        if !self.is_dirty[v] {
            self.is_dirty[v] = true;
            self.dirty.push(v as u32);
        }
    }

    fn end_step(&mut self, now: f64, rng: &mut RngStream) {
        let mut dirty = std::mem::take(&mut self.dirty);
        self.heap_updates_last_step = dirty.len();
        self.max_heap_updates_per_step = self.max_heap_updates_per_step.max(dirty.len());
        for &v in &dirty {
            let v = v as usize;
            let (r, d) = self.block_sums(v);
            self.total += (r + d) - (self.reaction_sums[v] + self.diffusion_sums[v]);
            self.reaction_sums[v] = r;
            self.diffusion_sums[v] = d;
            self.heap.update(v, now + rng.exponential(r + d));
            self.is_dirty[v] = false;
        }
        dirty.clear();
        self.dirty = dirty;
        let swaps = self.heap.swaps();
        self.counters.heap_swaps += swaps - self.swaps_reported;
        self.swaps_reported = swaps;
    }

    fn resync(&mut self) {
        self.total = self.reaction_sums.iter().chain(&self.diffusion_sums).sum();
    }

    fn total_propensity(&self) -> f64 {
        self.total
    }

    fn counters(&self) -> &QueueCounters {
        &self.counters
    }

    fn reset_counters(&mut self) {
        self.counters = QueueCounters::default();
    }
}
