//! Next-event generators. Every method implements [`EventSource`], so the
//! engine and the benchmarks drive them identically: select an event, then
//! push the new propensity of every affected channel.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::SimError;
use crate::rng::RngStream;
use crate::spatial::{NsmQueue, SubvolumeLayout};

pub mod binned;
pub mod cr;
pub mod direct;
pub mod grouped;
pub mod heap;

pub use binned::{BinPolicy, BinnedEventTable, BinnedNrm};
pub use cr::{CompositionRejection, CompositionRejectionTable};
pub use direct::{linear_select, LinearDirect, Selection};
pub use grouped::{GroupedDirect, GroupedTable};
pub use heap::{BinaryMinHeap, HeapNrm};

/// A selected event: absolute firing time and channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub channel: usize,
}

/// Work counters. All monotone within a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QueueCounters {
    /// Calls to `next_event` that produced an event.
    pub selections: u64,
    /// Calls to `update`.
    pub updates: u64,
    /// Bins examined (binned NRM) or groups examined (grouped, CR).
    pub bins_scanned: u64,
    /// Channels or bin entries examined during selection.
    pub entries_scanned: u64,
    /// Rejected composition-rejection trials.
    pub rejections: u64,
    pub heap_swaps: u64,
    pub rebuilds: u64,
    /// Bin entries removed from one bin and inserted elsewhere.
    pub moved_entries: u64,
    /// Float-drift fallbacks in prefix-sum searches.
    pub clamps: u64,
}

impl QueueCounters {
    pub fn merge(&mut self, other: &QueueCounters) {
        self.selections += other.selections;
        self.updates += other.updates;
        self.bins_scanned += other.bins_scanned;
        self.entries_scanned += other.entries_scanned;
        self.rejections += other.rejections;
        self.heap_swaps += other.heap_swaps;
        self.rebuilds += other.rebuilds;
        self.moved_entries += other.moved_entries;
        self.clamps += other.clamps;
    }

    /// Bins plus entries scanned per selection.
    pub fn mean_search_depth(&self) -> f64 {
        if self.selections == 0 {
            return 0.0;
        }
        (self.bins_scanned + self.entries_scanned) as f64 / self.selections as f64
    }

    pub fn per_selection(&self, count: u64) -> f64 {
        if self.selections == 0 {
            0.0
        } else {
            count as f64 / self.selections as f64
        }
    }

    pub fn per_update(&self, count: u64) -> f64 {
        if self.updates == 0 {
            0.0
        } else {
            count as f64 / self.updates as f64
        }
    }

    /// Flat `key=value` lines, one counter per line.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            out.push_str(k);
            out.push('=');
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }

    pub fn entries(&self) -> [(&'static str, u64); 9] {
        [
            ("selections", self.selections),
            ("updates", self.updates),
            ("bins_scanned", self.bins_scanned),
            ("entries_scanned", self.entries_scanned),
            ("rejections", self.rejections),
            ("heap_swaps", self.heap_swaps),
            ("rebuilds", self.rebuilds),
            ("moved_entries", self.moved_entries),
            ("clamps", self.clamps),
        ]
    }
}

/// Common contract of all next-event generators.
///
/// Driving protocol: `initialize` once; then repeatedly `next_event`, followed
/// by one `update` per affected channel (the fired channel included) and a
/// final `end_step`. For direct-method sources the returned time is
/// `now + Exp(a₀)`; for NRM-type sources it is the stored absolute time.
pub trait EventSource: Send {
    fn method(&self) -> Method;

    fn initialize(&mut self, propensities: &[f64], t0: f64, rng: &mut RngStream);

    /// `Ok(None)` means every propensity is zero (absorbing state).
    fn next_event(&mut self, now: f64, rng: &mut RngStream) -> Result<Option<Event>, SimError>;

    fn update(&mut self, channel: usize, propensity: f64, now: f64, rng: &mut RngStream);

    /// Called once after the updates of a step.
    fn end_step(&mut self, _now: f64, _rng: &mut RngStream) {}

    /// Recomputes any incrementally maintained sums from scratch.
    fn resync(&mut self) {}

    /// Current propensity sum as maintained by the source.
    fn total_propensity(&self) -> f64;

    fn counters(&self) -> &QueueCounters;

    fn reset_counters(&mut self);
}

/// Method identifiers, matching the `--method` flag values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Direct,
    Direct2d,
    Direct3d,
    CompositionRejection,
    NrmHeap,
    NrmBins,
    Nsm,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Direct,
        Method::Direct2d,
        Method::Direct3d,
        Method::CompositionRejection,
        Method::NrmHeap,
        Method::NrmBins,
        Method::Nsm,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Direct2d => "direct2d",
            Method::Direct3d => "direct3d",
            Method::CompositionRejection => "cr",
            Method::NrmHeap => "nrm-heap",
            Method::NrmBins => "nrm-bins",
            Method::Nsm => "nsm",
        }
    }

    /// Instantiates the source. NSM uses `layout` when given, otherwise it
    /// treats the whole network as one subvolume.
    pub fn build(self, options: &SourceOptions) -> Box<dyn EventSource> {
        match self {
            Method::Direct => Box::new(LinearDirect::new()),
            Method::Direct2d => Box::new(GroupedDirect::new(2)),
            Method::Direct3d => Box::new(GroupedDirect::new(3)),
            Method::CompositionRejection => Box::new(CompositionRejection::new()),
            Method::NrmHeap => Box::new(HeapNrm::new()),
            Method::NrmBins => Box::new(BinnedNrm::new(options.bin_policy)),
            Method::Nsm => Box::new(match &options.layout {
                Some(layout) => NsmQueue::new(Arc::clone(layout)),
                None => NsmQueue::well_mixed(),
            }),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownMethod(pub String);

impl fmt::Display for UnknownMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown method `{}` (expected one of direct, direct2d, direct3d, cr, nrm-heap, nrm-bins, nsm)",
            self.0
        )
    }
}

impl std::error::Error for UnknownMethod {}

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

/// Construction options shared by all methods.
#[derive(Debug, Clone, Default)]
pub struct SourceOptions {
    pub bin_policy: BinPolicy,
    pub layout: Option<Arc<SubvolumeLayout>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_ids_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.id().parse::<Method>().unwrap(), m);
        }
        assert!("bogus".parse::<Method>().is_err());
    }
}
