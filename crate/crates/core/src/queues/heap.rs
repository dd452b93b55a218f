//! Indexed binary min-heap and the classic next reaction method on top of it.

use super::{Event, EventSource, Method, QueueCounters};
use crate::error::SimError;
use crate::rng::RngStream;

/// Complete binary tree of `(time, id)` with a per-id position locator, so a
/// key can be changed in O(log n).
#[derive(Debug, Clone, Default)]
pub struct BinaryMinHeap {
    nodes: Vec<(f64, u32)>,
    position: Vec<u32>,
    swaps: u64,
}

impl BinaryMinHeap {
    /// Heapifies `times` (indexed by id) in O(n).
    pub fn from_times(times: &[f64]) -> Self {
        let nodes: Vec<(f64, u32)> = times.iter().enumerate().map(|(i, &t)| (t, i as u32)).collect();
        let position = (0..times.len() as u32).collect();
        let mut heap = BinaryMinHeap { nodes, position, swaps: 0 };
        for i in (0..heap.nodes.len() / 2).rev() {
            heap.sift_down(i);
        }
        heap.swaps = 0;
        heap
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Root, without removal.
    #[inline]
    pub fn peek(&self) -> Option<(f64, usize)> {
        self.nodes.first().map(|&(t, id)| (t, id as usize))
    }

    pub fn time_of(&self, id: usize) -> f64 {
        self.nodes[self.position[id] as usize].0
    }

    /// Total swaps performed by sift operations since construction.
    pub fn swaps(&self) -> u64 {
        self.swaps
    }

    /// Changes the key of `id` and restores heap order.
    pub fn update(&mut self, id: usize, time: f64) {
        let at = self.position[id] as usize;
        let old = std::mem::replace(&mut self.nodes[at].0, time);
        if time < old {
            self.sift_up(at);
        } else if time > old {
            self.sift_down(at);
        }
    }

    #[inline]
    fn swap(&mut self, a: usize, b: usize) {
        self.nodes.swap(a, b);
        self.position[self.nodes[a].1 as usize] = a as u32;
        self.position[self.nodes[b].1 as usize] = b as u32;
        self.swaps += 1;
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let parent = (i - 1) / 2;
            if self.nodes[i].0 < self.nodes[parent].0 {
                self.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        let n = self.nodes.len();
        loop {
            let left = 2 * i + 1;
            if left >= n {
                break;
            }
            let right = left + 1;
            let child = if right < n && self.nodes[right].0 < self.nodes[left].0 { right } else { left };
            if self.nodes[child].0 < self.nodes[i].0 {
                self.swap(i, child);
                i = child;
            } else {
                break;
            }
        }
    }

    /// Heap order and locator bijection.
    pub fn audit(&self) -> Result<(), String> {
        for i in 1..self.nodes.len() {
            let parent = (i - 1) / 2;
            if self.nodes[parent].0 > self.nodes[i].0 {
                return Err(format!("node {i} smaller than parent {parent}"));
            }
        }
        for (i, &(_, id)) in self.nodes.iter().enumerate() {
            if self.position[id as usize] as usize != i {
                return Err(format!("locator of {id} points to {}", self.position[id as usize]));
            }
        }
        Ok(())
    }
}

/// Next reaction method with one absolute event time per channel in a
/// binary min-heap. Zero-propensity channels stay in the heap at +∞.
#[derive(Debug, Default)]
pub struct HeapNrm {
    heap: BinaryMinHeap,
    propensities: Vec<f64>,
    sum: f64,
    counters: QueueCounters,
    swaps_reported: u64,
}

impl HeapNrm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn heap(&self) -> &BinaryMinHeap {
        &self.heap
    }

    fn sync_swaps(&mut self) {
        let total = self.heap.swaps();
        self.counters.heap_swaps += total - self.swaps_reported;
        self.swaps_reported = total;
    }
}

impl EventSource for HeapNrm {
    fn method(&self) -> Method {
        Method::NrmHeap
    }

    fn initialize(&mut self, propensities: &[f64], t0: f64, rng: &mut RngStream) {
        let times: Vec<f64> = propensities.iter().map(|&a| t0 + rng.exponential(a)).collect();
        self.heap = BinaryMinHeap::from_times(&times);
        self.propensities = propensities.to_vec();
        self.sum = propensities.iter().sum();
        self.swaps_reported = 0;
    }

    fn next_event(&mut self, _now: f64, _rng: &mut RngStream) -> Result<Option<Event>, SimError> {
        match self.heap.peek() {
            Some((time, channel)) if time.is_finite() => {
                self.counters.selections += 1;
                Ok(Some(Event { time, channel }))
            }
            _ => Ok(None),
        }
    }

    fn update(&mut self, channel: usize, propensity: f64, now: f64, rng: &mut RngStream) {
        self.counters.updates += 1;
        self.sum += propensity - std::mem::replace(&mut self.propensities[channel], propensity);
        self.heap.update(channel, now + rng.exponential(propensity));
        self.sync_swaps();
    }

    fn resync(&mut self) {
        self.sum = self.propensities.iter().sum();
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

    fn drain_order(heap: &mut BinaryMinHeap) -> Vec<f64> {
        let mut out = Vec::new();
        while let Some((t, id)) = heap.peek() {
            if t.is_infinite() {
                break;
            }
            out.push(t);
            heap.update(id, f64::INFINITY);
        }
        out
    }

    #[test]
    fn root_is_minimum() {
        let heap = BinaryMinHeap::from_times(&[f64::INFINITY, 5.0, 7.0, 6.0]);
        assert_eq!(heap.peek(), Some((5.0, 1)));
        let heap = BinaryMinHeap::from_times(&[3.0]);
        assert_eq!(heap.peek(), Some((3.0, 0)));
    }

    #[test]
    fn root_matches_full_scan() {
        let mut rng = RngStream::new(17);
        let times: Vec<f64> = (0..1000).map(|_| rng.uniform() * 100.0).collect();
        let heap = BinaryMinHeap::from_times(&times);
        let min = times.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(heap.peek().unwrap().0, min);
        heap.audit().unwrap();
    }

    #[test]
    fn decrease_and_infinite_updates() {
        let mut heap = BinaryMinHeap::from_times(&[1.0, 2.0, 3.0]);
        heap.update(2, 0.5);
        assert_eq!(heap.peek(), Some((0.5, 2)));
        heap.update(2, f64::INFINITY);
        assert_eq!(heap.peek(), Some((1.0, 0)));
        let leaf = heap.position[2] as usize;
        assert!(2 * leaf + 1 >= heap.len());
        heap.audit().unwrap();
    }

    #[test]
    fn random_updates_then_sorted_extraction() {
        let mut rng = RngStream::new(23);
        let n = 500;
        let mut times: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        let mut heap = BinaryMinHeap::from_times(&times);
        for _ in 0..10_000 {
            let id = rng.below(n);
            let t = if rng.uniform() < 0.05 { f64::INFINITY } else { rng.uniform() * 10.0 };
            times[id] = t;
            heap.update(id, t);
        }
        heap.audit().unwrap();
        let mut expected: Vec<f64> = times.into_iter().filter(|t| t.is_finite()).collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(drain_order(&mut heap), expected);
    }
}
