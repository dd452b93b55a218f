//! Reaction-generator microbenchmarks.
//!
//! A synthetic network of `M` Poisson processes with fixed rates is driven
//! through the same select/update protocol as a real simulation: after each
//! event, the fired channel and `out_degree − 1` random partners are
//! "updated" with their unchanged rate, so the queue does real work (fresh
//! event times, bin moves, sum updates) while the law stays stationary.
//! Counter-based results are deterministic for a fixed seed; wall-clock
//! numbers are informational.

use std::io::{self, Write};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use thiserror::Error;

use crate::error::SimError;
use crate::model::DependencyGraph;
use crate::queues::{BinPolicy, EventSource, Method, QueueCounters, SourceOptions};
use crate::rng::RngStream;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("out degree {degree} must be between 1 and M = {channels}")]
    Degree { degree: usize, channels: usize },
    #[error("invalid benchmark spec: {0}")]
    Spec(String),
    #[error("the next subvolume method needs a spatial model and is not a standalone generator")]
    Nsm,
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Rates and update graph of a synthetic generator benchmark.
#[derive(Debug, Clone)]
pub struct BenchNetwork {
    pub rates: Vec<f64>,
    pub graph: DependencyGraph,
}

/// `M` unit-rate channels; each channel's update set is itself plus
/// `out_degree − 1` distinct channels drawn uniformly from the others.
pub fn random_unit_rate_network(channels: usize, out_degree: usize, seed: u64) -> Result<BenchNetwork, BenchError> {
    if out_degree == 0 || out_degree > channels {
        return Err(BenchError::Degree { degree: out_degree, channels });
    }
    let mut rng = RngStream::new(seed);
    let lists = (0..channels)
        .map(|j| {
            let mut picked: Vec<u32> = Vec::with_capacity(out_degree);
            if out_degree == channels {
                return (0..channels as u32).collect();
            }
            while picked.len() < out_degree - 1 {
                let i = rng.below(channels) as u32;
                if i as usize != j && !picked.contains(&i) {
                    picked.push(i);
                }
            }
            picked
        })
        .collect();
    Ok(BenchNetwork { rates: vec![1.0; channels], graph: DependencyGraph::from_lists(lists) })
}

impl BenchNetwork {
    /// Replaces the rates, keeping the update graph.
    pub fn with_rates(mut self, rates: Vec<f64>) -> Self {
        assert_eq!(rates.len(), self.rates.len());
        self.rates = rates;
        self
    }

    pub fn channel_count(&self) -> usize {
        self.rates.len()
    }
}

/// Propensity profiles used by the search-depth experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateProfile {
    /// Every channel at rate 1.
    Unit,
    /// Equal rates summing to 1.
    Normalized,
    /// Channel 0 at `fast`; the others share `slow_total` equally.
    FastSlow { fast: f64, slow_total: f64 },
}

impl RateProfile {
    pub fn rates(self, channels: usize) -> Vec<f64> {
        match self {
            RateProfile::Unit => vec![1.0; channels],
            RateProfile::Normalized => vec![1.0 / channels as f64; channels],
            RateProfile::FastSlow { fast, slow_total } => {
                let mut r = vec![slow_total / (channels - 1).max(1) as f64; channels];
                r[0] = fast;
                r
            }
        }
    }
}

/// Counters accumulated by [`drive`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DriveCounters {
    pub steps: u64,
    pub propensity_updates: u64,
}

/// Runs `steps` select/update cycles. Returns the final time.
pub fn drive(
    source: &mut dyn EventSource,
    network: &BenchNetwork,
    steps: u64,
    mut now: f64,
    rng: &mut RngStream,
    counters: &mut DriveCounters,
) -> Result<f64, SimError> {
    for _ in 0..steps {
        let event = source
            .next_event(now, rng)?
            .ok_or_else(|| SimError::Corrupted("benchmark network ran dry".into()))?;
        now = event.time;
        let affected = network.graph.affects(event.channel);
        for &i in affected {
            source.update(i as usize, network.rates[i as usize], now, rng);
        }
        source.end_step(now, rng);
        counters.steps += 1;
        counters.propensity_updates += affected.len() as u64;
        if counters.steps % 1_000_000 == 0 {
            source.resync();
        }
    }
    Ok(now)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub method: Method,
    pub channels: usize,
    pub out_degree: usize,
    pub steps: u64,
    pub warmup: u64,
    pub seed: u64,
    pub repetitions: usize,
    pub profile: RateProfile,
    pub bin_policy: BinPolicy,
}

impl BenchSpec {
    pub fn new(method: Method, channels: usize, steps: u64) -> Self {
        BenchSpec {
            method,
            channels,
            out_degree: 10.min(channels.max(1)),
            steps,
            warmup: 1_000,
            seed: 1,
            repetitions: 5,
            profile: RateProfile::Unit,
            bin_policy: BinPolicy::default(),
        }
    }

    fn validate(&self) -> Result<(), BenchError> {
        if self.method == Method::Nsm {
            return Err(BenchError::Nsm);
        }
        if self.repetitions == 0 {
            return Err(BenchError::Spec("repetitions must be at least 1".into()));
        }
        if self.steps < self.warmup {
            return Err(BenchError::Spec(format!("steps {} below warmup {}", self.steps, self.warmup)));
        }
        if self.channels == 0 {
            return Err(BenchError::Spec("M must be positive".into()));
        }
        Ok(())
    }
}

/// Host name and UNIX timestamp of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvStamp {
    pub host: String,
    pub timestamp: u64,
}

impl EnvStamp {
    pub fn capture() -> Self {
        let host = std::env::var("HOSTNAME")
            .ok()
            .or_else(|| std::fs::read_to_string("/etc/hostname").ok())
            .map(|h| h.trim().to_string())
            .filter(|h| !h.is_empty())
            .unwrap_or_else(|| "unknown".into());
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        EnvStamp { host, timestamp }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchResult {
    pub spec: BenchSpec,
    /// Median, min and max elapsed seconds of the timed loop.
    pub elapsed_median: f64,
    pub elapsed_min: f64,
    pub elapsed_max: f64,
    pub counters: QueueCounters,
    pub drive: DriveCounters,
    pub env: EnvStamp,
}

impl BenchResult {
    pub fn ns_per_step(&self) -> f64 {
        self.elapsed_median * 1e9 / self.spec.steps as f64
    }

    pub fn mean_updates_per_step(&self) -> f64 {
        self.drive.propensity_updates as f64 / self.drive.steps.max(1) as f64
    }

    pub const CSV_HEADER: &'static str = "method,M,degree,steps,reps,median_s,min_s,max_s,ns_per_step,\
selections,updates,bins_scanned,entries_scanned,rejections,heap_swaps,rebuilds,moved_entries,clamps,\
search_depth,updates_per_step,host,timestamp";

    pub fn csv_row(&self) -> String {
        let c = &self.counters;
        format!(
            "{},{},{},{},{},{:.6},{:.6},{:.6},{:.2},{},{},{},{},{},{},{},{},{},{:.4},{:.3},{},{}",
            self.spec.method,
            self.spec.channels,
            self.spec.out_degree,
            self.spec.steps,
            self.spec.repetitions,
            self.elapsed_median,
            self.elapsed_min,
            self.elapsed_max,
            self.ns_per_step(),
            c.selections,
            c.updates,
            c.bins_scanned,
            c.entries_scanned,
            c.rejections,
            c.heap_swaps,
            c.rebuilds,
            c.moved_entries,
            c.clamps,
            c.mean_search_depth(),
            self.mean_updates_per_step(),
            self.env.host,
            self.env.timestamp,
        )
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Times `spec.steps` select+update cycles after `spec.warmup` untimed ones.
/// Model construction and the first build are outside the timed region.
/// Counters come from the first repetition (all repetitions are identical).
pub fn bench_generator(spec: &BenchSpec) -> Result<BenchResult, BenchError> {
    spec.validate()?;
    let network = random_unit_rate_network(spec.channels, spec.out_degree, spec.seed)?
        .with_rates(spec.profile.rates(spec.channels));
    bench_on(spec, &network)
}

/// As [`bench_generator`] but on a caller-supplied network.
pub fn bench_on(spec: &BenchSpec, network: &BenchNetwork) -> Result<BenchResult, BenchError> {
    spec.validate()?;
    let options = SourceOptions { bin_policy: spec.bin_policy, layout: None };
    let mut timings = Vec::with_capacity(spec.repetitions);
    let mut counters = None;
    for _ in 0..spec.repetitions {
        let mut rng = RngStream::new(spec.seed);
        let mut source = spec.method.build(&options);
        source.initialize(&network.rates, 0.0, &mut rng);
        let mut warm = DriveCounters::default();
        let now = drive(source.as_mut(), network, spec.warmup, 0.0, &mut rng, &mut warm)?;
        source.reset_counters();

        let mut timed = DriveCounters::default();
        let start = Instant::now();
        drive(source.as_mut(), network, spec.steps, now, &mut rng, &mut timed)?;
        timings.push(start.elapsed().as_secs_f64());
        counters.get_or_insert((*source.counters(), timed));
    }
    let (queue, drive) = counters.expect("at least one repetition");
    let min = timings.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = timings.iter().cloned().fold(0.0, f64::max);
    Ok(BenchResult {
        spec: spec.clone(),
        elapsed_median: median(&mut timings),
        elapsed_min: min,
        elapsed_max: max,
        counters: queue,
        drive,
        env: EnvStamp::capture(),
    })
}

/// Counter-only run: one repetition, no clock reads, so it also works where
/// no timer is available. Deterministic.
pub fn measure_counters(spec: &BenchSpec, network: &BenchNetwork) -> Result<(QueueCounters, DriveCounters), BenchError> {
    spec.validate()?;
    let options = SourceOptions { bin_policy: spec.bin_policy, layout: None };
    let mut rng = RngStream::new(spec.seed);
    let mut source = spec.method.build(&options);
    source.initialize(&network.rates, 0.0, &mut rng);
    let mut warm = DriveCounters::default();
    let now = drive(source.as_mut(), network, spec.warmup, 0.0, &mut rng, &mut warm)?;
    source.reset_counters();
    let mut counted = DriveCounters::default();
    drive(source.as_mut(), network, spec.steps, now, &mut rng, &mut counted)?;
    Ok((*source.counters(), counted))
}

/// A sweep result table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to memory");
        String::from_utf8(buf).expect("utf-8")
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    pub fn value(&self, row: usize, name: &str) -> f64 {
        let c = self.column(name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows[row][c].parse().unwrap_or(f64::NAN)
    }
}

/// Options shared by the sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub steps: u64,
    pub warmup: u64,
    pub repetitions: usize,
    pub out_degree: usize,
    pub seed: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions { steps: 1_000_000, warmup: 1_000, repetitions: 3, out_degree: 10, seed: 1 }
    }
}

fn sweep_spec(method: Method, channels: usize, opts: &SweepOptions) -> BenchSpec {
    BenchSpec {
        method,
        channels,
        out_degree: opts.out_degree.min(channels),
        steps: opts.steps,
        warmup: opts.warmup,
        seed: opts.seed,
        repetitions: opts.repetitions,
        profile: RateProfile::Normalized,
        bin_policy: BinPolicy::default(),
    }
}

/// Binned NRM at fixed widths (in units of the mean step; rates sum to 1).
/// Columns: `W, ns_per_step, bins_per_select, entries_per_select,
/// search_depth, theory_bins, theory_entries, rebuilds, is_sqrt2, is_16`.
pub fn sweep_bin_width(channels: usize, widths: &[f64], opts: &SweepOptions) -> Result<Table, BenchError> {
    if widths.iter().any(|&w| !(w > 0.0)) {
        return Err(BenchError::Spec("bin widths must be positive".into()));
    }
    let base = sweep_spec(Method::NrmBins, channels, opts);
    let network = random_unit_rate_network(channels, base.out_degree, opts.seed)?
        .with_rates(RateProfile::Normalized.rates(channels));
    let mut rows = Vec::new();
    for &w in widths {
        let spec = BenchSpec { bin_policy: BinPolicy::fixed_width(w), ..base.clone() };
        let r = bench_on(&spec, &network)?;
        let c = &r.counters;
        rows.push(vec![
            format!("{w}"),
            format!("{:.2}", r.ns_per_step()),
            format!("{:.4}", c.per_selection(c.bins_scanned)),
            format!("{:.4}", c.per_selection(c.entries_scanned)),
            format!("{:.4}", c.mean_search_depth()),
            format!("{:.4}", 1.0 / w + 1.0),
            format!("{:.4}", w / 2.0 + 1.0),
            c.rebuilds.to_string(),
            ((w - std::f64::consts::SQRT_2).abs() < 1e-9).to_string(),
            (w == 16.0).to_string(),
        ]);
    }
    Ok(Table {
        header: vec![
            "W",
            "ns_per_step",
            "bins_per_select",
            "entries_per_select",
            "search_depth",
            "theory_bins",
            "theory_entries",
            "rebuilds",
            "is_sqrt2",
            "is_16",
        ],
        rows,
    })
}

/// Full factorial over bin counts × widths with both fixed.
/// Columns: `K, W, ns_per_step, search_depth, rebuilds, window`.
pub fn sweep_bins_and_width(
    channels: usize,
    bins: &[usize],
    widths: &[f64],
    opts: &SweepOptions,
) -> Result<Table, BenchError> {
    if bins.is_empty() || widths.is_empty() {
        return Err(BenchError::Spec("bin and width lists must be nonempty".into()));
    }
    let base = sweep_spec(Method::NrmBins, channels, opts);
    let network = random_unit_rate_network(channels, base.out_degree, opts.seed)?
        .with_rates(RateProfile::Normalized.rates(channels));
    let mut rows = Vec::new();
    for &k in bins {
        for &w in widths {
            let policy = BinPolicy { width: Some(w), bins: Some(k), ..BinPolicy::default() };
            let spec = BenchSpec { bin_policy: policy, ..base.clone() };
            let r = bench_on(&spec, &network)?;
            rows.push(vec![
                k.to_string(),
                format!("{w}"),
                format!("{:.2}", r.ns_per_step()),
                format!("{:.4}", r.counters.mean_search_depth()),
                r.counters.rebuilds.to_string(),
                format!("{}", k as f64 * w),
            ]);
        }
    }
    Ok(Table { header: vec!["K", "W", "ns_per_step", "search_depth", "rebuilds", "window"], rows })
}

/// Per-step cost against `M` for each method, unit rates.
/// Columns: `method, M, ns_per_step, search_depth, entries_per_select,
/// heap_swaps_per_update, rejections_per_select, updates_per_step`.
pub fn sweep_scaling(methods: &[Method], sizes: &[usize], opts: &SweepOptions) -> Result<Table, BenchError> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(BenchError::Spec("M list must be strictly ascending".into()));
    }
    let mut rows = Vec::new();
    for &m in sizes {
        let network = random_unit_rate_network(m, opts.out_degree.min(m), opts.seed)?;
        for &method in methods {
            let spec = BenchSpec { profile: RateProfile::Unit, ..sweep_spec(method, m, opts) };
            let r = bench_on(&spec, &network)?;
            let c = &r.counters;
            rows.push(vec![
                method.to_string(),
                m.to_string(),
                format!("{:.2}", r.ns_per_step()),
                format!("{:.4}", c.mean_search_depth()),
                format!("{:.4}", c.per_selection(c.entries_scanned)),
                format!("{:.4}", c.per_update(c.heap_swaps)),
                format!("{:.4}", c.per_selection(c.rejections)),
                format!("{:.3}", r.mean_updates_per_step()),
            ]);
        }
    }
    Ok(Table {
        header: vec![
            "method",
            "M",
            "ns_per_step",
            "search_depth",
            "entries_per_select",
            "heap_swaps_per_update",
            "rejections_per_select",
            "updates_per_step",
        ],
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn network_degrees() {
        let net = random_unit_rate_network(10, 10, 1).unwrap();
        assert!((0..10).all(|j| net.graph.affects(j).len() == 10));
        let net = random_unit_rate_network(50, 1, 1).unwrap();
        assert!((0..50).all(|j| net.graph.affects(j) == [j as u32]));
        let net = random_unit_rate_network(1000, 10, 4).unwrap();
        assert_eq!(net.graph.mean_out_degree(), 10.0);
        assert!(matches!(random_unit_rate_network(5, 6, 1), Err(BenchError::Degree { .. })));
        assert!(matches!(random_unit_rate_network(5, 0, 1), Err(BenchError::Degree { .. })));
    }

    #[test]
    fn spec_validation() {
        let spec = BenchSpec { warmup: 10, ..BenchSpec::new(Method::Direct, 10, 5) };
        assert!(bench_generator(&spec).is_err());
        assert!(matches!(bench_generator(&BenchSpec::new(Method::Nsm, 10, 5000)), Err(BenchError::Nsm)));
    }

    #[test]
    fn counters_are_deterministic() {
        let spec = BenchSpec { repetitions: 2, warmup: 100, ..BenchSpec::new(Method::NrmBins, 500, 5_000) };
        let a = bench_generator(&spec).unwrap();
        let b = bench_generator(&spec).unwrap();
        assert_eq!(a.counters, b.counters);
        let net = random_unit_rate_network(500, 10, 1).unwrap();
        assert_eq!(measure_counters(&spec, &net).unwrap().0, a.counters);
        assert_eq!(a.counters.selections, 5_000);
        assert_eq!(a.mean_updates_per_step(), 10.0);
        assert_eq!(a.csv_row().split(',').count(), BenchResult::CSV_HEADER.split(',').count());
    }

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn tiny_bin_width_inflates_bin_scans() {
        let opts = SweepOptions { steps: 50_000, warmup: 1_000, repetitions: 1, out_degree: 1, seed: 3 };
        let t = sweep_bin_width(10_000, &[0.1], &opts).unwrap();
        let bins = t.value(0, "bins_per_select");
        assert!((bins - 11.0).abs() < 0.05 * 11.0, "{bins}");
    }

    #[test]
    fn bins_times_width_controls_rebuilds() {
        let opts = SweepOptions { steps: 20_000, warmup: 1_000, repetitions: 1, out_degree: 1, seed: 3 };
        let t = sweep_bins_and_width(1000, &[4, 100_000], &[1.0], &opts).unwrap();
        assert!(t.value(0, "rebuilds") > 0.0);
        assert_eq!(t.value(1, "rebuilds"), 0.0);
    }
}
