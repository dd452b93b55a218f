//! Direct method with a linear search over the propensity array.

use super::{Event, EventSource, Method, QueueCounters};
use crate::error::SimError;
use crate::rng::RngStream;

/// Outcome of a prefix-sum search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub index: usize,
    /// Entries examined, including the selected one.
    pub scanned: usize,
    /// True when `r` exceeded the accumulated sum and the last nonzero entry
    /// was returned instead.
    pub clamped: bool,
}

/// Smallest `j` with `a_0 + ... + a_j > r`. Zero entries can never be
/// selected. Returns `None` only if every entry is zero.
#[inline]
pub fn linear_select(values: &[f64], r: f64) -> Option<Selection> {
    let mut acc = 0.0;
    let mut last_nonzero = None;
    for (j, &a) in values.iter().enumerate() {
        if a > 0.0 {
            acc += a;
            if acc > r {
                return Some(Selection { index: j, scanned: j + 1, clamped: false });
            }
            last_nonzero = Some(j);
        }
    }
    last_nonzero.map(|index| Selection { index, scanned: values.len(), clamped: true })
}

/// Gillespie's direct method: τ ~ Exp(a₀), then a linear search for j.
#[derive(Debug, Default)]
pub struct LinearDirect {
    propensities: Vec<f64>,
    sum: f64,
    active: usize,
    counters: QueueCounters,
}

impl LinearDirect {
    pub fn new() -> Self {
        Self::default()
    }
}

impl EventSource for LinearDirect {
    fn method(&self) -> Method {
        Method::Direct
    }

    fn initialize(&mut self, propensities: &[f64], _t0: f64, _rng: &mut RngStream) {
        self.propensities.clear();
        self.propensities.extend_from_slice(propensities);
        self.resync();
    }

    fn next_event(&mut self, now: f64, rng: &mut RngStream) -> Result<Option<Event>, SimError> {
        if self.active == 0 {
            return Ok(None);
        }
        let tau = rng.exponential(self.sum);
        let r = rng.uniform_half_open() * self.sum;
        let sel = linear_select(&self.propensities, r).expect("active channel present");
        self.counters.selections += 1;
        self.counters.entries_scanned += sel.scanned as u64;
        self.counters.clamps += sel.clamped as u64;
        Ok(Some(Event { time: now + tau, channel: sel.index }))
    }

    fn update(&mut self, channel: usize, propensity: f64, _now: f64, _rng: &mut RngStream) {
        let old = std::mem::replace(&mut self.propensities[channel], propensity);
        self.counters.updates += 1;
        match (old > 0.0, propensity > 0.0) {
            (false, true) => self.active += 1,
            (true, false) => self.active -= 1,
            _ => {}
        }
        if self.active == 0 {
            self.sum = 0.0;
        } else {
            self.sum += propensity - old;
        }
    }

    fn resync(&mut self) {
        self.sum = self.propensities.iter().sum();
        self.active = self.propensities.iter().filter(|&&a| a > 0.0).count();
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

    #[test]
    fn prefix_search_examples() {
        // 0-based index 1 is the second channel
        assert_eq!(linear_select(&[1.0, 2.0, 3.0], 1.5).unwrap().index, 1);
        let s = linear_select(&[0.0, 0.0, 5.0], 0.0).unwrap();
        assert_eq!((s.index, s.scanned, s.clamped), (2, 3, false));
        assert_eq!(linear_select(&[0.0, 0.0], 0.0), None);
    }

    #[test]
    fn overshoot_clamps_to_last_nonzero() {
        let s = linear_select(&[1.0, 2.0, 0.0], 3.0).unwrap();
        assert_eq!((s.index, s.clamped), (1, true));
    }

    #[test]
    fn monte_carlo_frequency_matches_weights() {
        let mut rng = RngStream::new(3);
        let a = [1.0, 2.0, 3.0];
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| linear_select(&a, rng.uniform_half_open() * 6.0).unwrap().index == 2)
            .count();
        let f = hits as f64 / n as f64;
        assert!((f - 0.5).abs() < 0.002, "freq {f}");
    }

    #[test]
    fn absorbing_state_returns_none() {
        let mut rng = RngStream::new(1);
        let mut q = LinearDirect::new();
        q.initialize(&[0.0, 0.0], 0.0, &mut rng);
        assert_eq!(q.next_event(0.0, &mut rng).unwrap(), None);
        q.update(1, 2.0, 0.0, &mut rng);
        let ev = q.next_event(0.0, &mut rng).unwrap().unwrap();
        assert_eq!(ev.channel, 1);
        q.update(1, 0.0, 0.0, &mut rng);
        assert_eq!(q.total_propensity(), 0.0);
        assert_eq!(q.next_event(0.0, &mut rng).unwrap(), None);
    }
}
