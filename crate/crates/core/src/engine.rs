//! Trajectory driver: select → advance → apply → update, for any method.

use std::io::{self, Write};
use std::sync::Arc;

use crate::error::SimError;
use crate::model::{DependencyGraph, ReactionNetwork, SystemState};
use crate::queues::{BinPolicy, Event, EventSource, Method, QueueCounters, SourceOptions};
use crate::rng::{realization_seed, RngStream};
use crate::spatial::{SpatialModel, SubvolumeLayout};
use crate::stats::Moments;

/// A network ready to simulate. Shared read-only between realizations.
#[derive(Debug, Clone)]
pub struct SimModel {
    pub network: Arc<ReactionNetwork>,
    pub graph: Arc<DependencyGraph>,
    pub initial: Vec<u64>,
    /// Subvolume grouping for NSM; `None` for well-mixed models.
    pub layout: Option<Arc<SubvolumeLayout>>,
}

impl SimModel {
    pub fn new(network: ReactionNetwork, initial: Vec<u64>) -> Self {
        assert_eq!(network.species_count(), initial.len());
        let graph = DependencyGraph::build(&network);
        SimModel { network: Arc::new(network), graph: Arc::new(graph), initial, layout: None }
    }

    pub fn spatial(model: &SpatialModel, initial: Vec<u64>) -> Self {
        assert_eq!(model.network.species_count(), initial.len());
        SimModel {
            network: Arc::clone(&model.network),
            graph: Arc::clone(&model.graph),
            initial,
            layout: Some(Arc::clone(&model.layout)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputMode {
    /// Snapshots at 0, Δt, 2Δt, … ≤ t_final.
    Interval(f64),
    FinalOnly,
    CountersOnly,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub method: Method,
    pub t_final: f64,
    pub seed: u64,
    pub output: OutputMode,
    pub max_steps: u64,
    pub bin_policy: BinPolicy,
    /// Steps between full recomputations of incrementally kept sums.
    pub resync_interval: u64,
}

impl RunConfig {
    pub fn new(method: Method, t_final: f64, seed: u64) -> Self {
        RunConfig {
            method,
            t_final,
            seed,
            output: OutputMode::FinalOnly,
            max_steps: 1_000_000_000,
            bin_policy: BinPolicy::default(),
            resync_interval: 1_000_000,
        }
    }

    pub fn with_output(mut self, output: OutputMode) -> Self {
        self.output = output;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return Err(SimError::Config(format!("t_final must be positive, got {}", self.t_final)));
        }
        if let OutputMode::Interval(dt) = self.output {
            if !(dt > 0.0) {
                return Err(SimError::Config(format!("snapshot interval must be positive, got {dt}")));
            }
        }
        if self.resync_interval == 0 {
            return Err(SimError::Config("resync interval must be positive".into()));
        }
        Ok(())
    }

    /// Snapshot times implied by the output mode.
    pub fn sample_times(&self) -> Vec<f64> {
        match self.output {
            OutputMode::Interval(dt) => {
                let n = (self.t_final / dt * (1.0 + 1e-12)).floor() as usize;
                (0..=n).map(|i| i as f64 * dt).collect()
            }
            OutputMode::FinalOnly => vec![self.t_final],
            OutputMode::CountersOnly => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    FinalTime,
    /// All propensities zero; the state is constant from here on.
    Absorbing,
    /// `max_steps` reached before `t_final`; output is truncated.
    MaxSteps,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepCounters {
    pub steps: u64,
    pub propensity_updates: u64,
    pub queue: QueueCounters,
}

impl StepCounters {
    pub fn merge(&mut self, other: &StepCounters) {
        self.steps += other.steps;
        self.propensity_updates += other.propensity_updates;
        self.queue.merge(&other.queue);
    }

    /// Mean propensity updates per step.
    pub fn mean_updates(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.propensity_updates as f64 / self.steps as f64
        }
    }

    /// Flat `key=value` text, one per line.
    pub fn to_key_values(&self) -> String {
        format!(
            "steps={}\npropensity_updates={}\n{}",
            self.steps,
            self.propensity_updates,
            self.queue.to_key_values()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub populations: Vec<Vec<u64>>,
    pub final_state: Vec<u64>,
    pub final_time: f64,
    pub steps: u64,
    pub termination: Termination,
}

impl Trajectory {
    /// CSV with header `t,<species...>`.
    pub fn write_csv<W: Write>(&self, species: &[String], out: &mut W) -> io::Result<()> {
        write!(out, "t")?;
        for s in species {
            write!(out, ",{s}")?;
        }
        writeln!(out)?;
        for (t, pops) in self.times.iter().zip(&self.populations) {
            write!(out, "{t}")?;
            for n in pops {
                write!(out, ",{n}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// One trajectory in progress. Owns its state, queue and random stream.
pub struct Simulation<'m> {
    model: &'m SimModel,
    state: SystemState,
    source: Box<dyn EventSource>,
    rng: RngStream,
    counters: StepCounters,
    resync_interval: u64,
}

impl<'m> Simulation<'m> {
    pub fn new(model: &'m SimModel, method: Method, bin_policy: BinPolicy, seed: u64) -> Self {
        let options = SourceOptions { bin_policy, layout: model.layout.clone() };
        let mut source = method.build(&options);
        let mut rng = RngStream::new(seed);
        let state = SystemState::new(model.initial.clone());
        let props = model.network.propensities(&state.populations);
        source.initialize(&props.values, state.time, &mut rng);
        Simulation {
            model,
            state,
            source,
            rng,
            counters: StepCounters::default(),
            resync_interval: 1_000_000,
        }
    }

    pub fn state(&self) -> &SystemState {
        &self.state
    }

    pub fn source(&self) -> &dyn EventSource {
        self.source.as_ref()
    }

    pub fn counters(&self) -> StepCounters {
        StepCounters { queue: *self.source.counters(), ..self.counters }
    }

    /// Next event without applying it.
    pub fn peek(&mut self) -> Result<Option<Event>, SimError> {
        self.source.next_event(self.state.time, &mut self.rng)
    }

    /// Applies `event` (as returned by [`peek`](Self::peek)) and pushes the
    /// affected propensities into the queue.
    pub fn apply(&mut self, event: Event) -> Result<(), SimError> {
        let network = &self.model.network;
        self.state.time = event.time;
        network.apply_reaction(&mut self.state, event.channel)?;
        let affected = self.model.graph.affects(event.channel);
        for &i in affected {
            let i = i as usize;
            let a = network.channels()[i].propensity(&self.state.populations);
            self.source.update(i, a, event.time, &mut self.rng);
        }
        self.source.end_step(event.time, &mut self.rng);
        self.counters.steps += 1;
        self.counters.propensity_updates += affected.len() as u64;
        if self.counters.steps % self.resync_interval == 0 {
            self.source.resync();
        }
        Ok(())
    }

    /// Fires the next event. `Ok(None)` in an absorbing state.
    pub fn step(&mut self) -> Result<Option<Event>, SimError> {
        let Some(event) = self.peek()? else { return Ok(None) };
        self.apply(event)?;
        Ok(Some(event))
    }
}

/// Runs one trajectory. Snapshot at time `s` reports the state after every
/// event with time ≤ `s`.
pub fn run(model: &SimModel, config: &RunConfig) -> Result<(Trajectory, StepCounters), SimError> {
    config.validate()?;
    let mut sim = Simulation::new(model, config.method, config.bin_policy, config.seed);
    sim.resync_interval = config.resync_interval;
    let sample_times = config.sample_times();
    let mut times = Vec::with_capacity(sample_times.len());
    let mut populations = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0;

    let termination = loop {
        if sim.counters.steps >= config.max_steps {
            break Termination::MaxSteps;
        }
        let Some(event) = sim.peek()? else { break Termination::Absorbing };
        if event.time > config.t_final {
            break Termination::FinalTime;
        }
        while next_sample < sample_times.len() && sample_times[next_sample] < event.time {
            times.push(sample_times[next_sample]);
            populations.push(sim.state.populations.clone());
            next_sample += 1;
        }
        sim.apply(event)?;
    };

    let final_time = match termination {
        Termination::MaxSteps => sim.state.time,
        _ => config.t_final,
    };
    while next_sample < sample_times.len() && sample_times[next_sample] <= final_time {
        times.push(sample_times[next_sample]);
        populations.push(sim.state.populations.clone());
        next_sample += 1;
    }
    let counters = sim.counters();
    let trajectory = Trajectory {
        times,
        populations,
        final_state: sim.state.populations,
        final_time,
        steps: counters.steps,
        termination,
    };
    Ok((trajectory, counters))
}

/// Per-snapshot, per-species moments over an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    /// `moments[snapshot][species]`.
    pub moments: Vec<Vec<Moments>>,
    pub counters: StepCounters,
    pub realizations: u64,
    pub truncated: u64,
    pub absorbed: u64,
}

impl EnsembleStats {
    fn empty(times: Vec<f64>, species: usize) -> Self {
        let moments = vec![vec![Moments::default(); species]; times.len()];
        EnsembleStats { times, moments, counters: StepCounters::default(), realizations: 0, truncated: 0, absorbed: 0 }
    }

    fn absorb(&mut self, trajectory: &Trajectory, counters: &StepCounters) {
        for (row, pops) in self.moments.iter_mut().zip(&trajectory.populations) {
            for (m, &n) in row.iter_mut().zip(pops) {
                m.push(n as f64);
            }
        }
        self.counters.merge(counters);
        self.realizations += 1;
        self.truncated += (trajectory.termination == Termination::MaxSteps) as u64;
        self.absorbed += (trajectory.termination == Termination::Absorbing) as u64;
    }

    pub fn mean(&self, snapshot: usize, species: usize) -> f64 {
        self.moments[snapshot][species].mean()
    }

    pub fn variance(&self, snapshot: usize, species: usize) -> f64 {
        self.moments[snapshot][species].variance()
    }

    /// CSV with header `t,species,mean,variance,std_error`.
    pub fn write_csv<W: Write>(&self, species: &[String], out: &mut W) -> io::Result<()> {
        writeln!(out, "t,species,mean,variance,std_error")?;
        for (t, row) in self.times.iter().zip(&self.moments) {
            for (name, m) in species.iter().zip(row) {
                writeln!(out, "{t},{name},{},{},{}", m.mean(), m.variance(), m.std_error())?;
            }
        }
        Ok(())
    }
}

/// Runs `n` realizations; realization `k` uses seed `config.seed ^ mix64(k)`.
/// Output is independent of scheduling: per-realization results are reduced
/// in realization order.
pub fn run_ensemble(model: &SimModel, config: &RunConfig, n: u64) -> Result<EnsembleStats, SimError> {
    config.validate()?;
    if n == 0 {
        return Err(SimError::Config("ensemble needs at least one realization".into()));
    }
    if config.output == OutputMode::CountersOnly {
        return Err(SimError::Config("ensemble statistics need snapshots".into()));
    }
    let one = |k: u64| {
        let cfg = RunConfig { seed: realization_seed(config.seed, k), ..*config };
        run(model, &cfg)
    };

    #[cfg(feature = "parallel")]
    let results: Vec<_> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<_> = (0..n).map(one).collect();

    let mut stats = EnsembleStats::empty(config.sample_times(), model.network.species_count());
    for result in results {
        let (trajectory, counters) = result?;
        stats.absorb(&trajectory, &counters);
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Channel;

    fn birth_only(rate: f64) -> SimModel {
        let ch = Channel::new("birth", &[], &[(0, 1)], rate).unwrap();
        SimModel::new(ReactionNetwork::new(vec!["A".into()], vec![ch]).unwrap(), vec![0])
    }

    #[test]
    fn poisson_step_count() {
        let model = birth_only(1.0);
        for method in Method::ALL {
            let (traj, counters) = run(&model, &RunConfig::new(method, 100.0, 3)).unwrap();
            assert_eq!(traj.termination, Termination::FinalTime);
            assert!((70..=130).contains(&traj.steps), "{method}: {}", traj.steps);
            assert_eq!(traj.final_state[0], traj.steps);
            assert_eq!(counters.steps, traj.steps);
        }
    }

    #[test]
    fn absorbing_model_keeps_initial_state() {
        let ch = Channel::new("dead", &[(0, 1)], &[], 0.0).unwrap();
        let model = SimModel::new(ReactionNetwork::new(vec!["A".into()], vec![ch]).unwrap(), vec![4]);
        let cfg = RunConfig::new(Method::NrmBins, 5.0, 1).with_output(OutputMode::Interval(1.0));
        let (traj, _) = run(&model, &cfg).unwrap();
        assert_eq!(traj.termination, Termination::Absorbing);
        assert_eq!(traj.times, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(traj.populations.iter().all(|p| p == &vec![4]));
        assert_eq!(traj.steps, 0);
    }

    #[test]
    fn runs_are_bit_identical() {
        let model = birth_only(2.5);
        let cfg = RunConfig::new(Method::NrmBins, 20.0, 99).with_output(OutputMode::Interval(0.5));
        assert_eq!(run(&model, &cfg).unwrap(), run(&model, &cfg).unwrap());
    }

    #[test]
    fn max_steps_truncates_visibly() {
        let model = birth_only(10.0);
        let mut cfg = RunConfig::new(Method::Direct, 100.0, 1).with_output(OutputMode::Interval(1.0));
        cfg.max_steps = 25;
        let (traj, _) = run(&model, &cfg).unwrap();
        assert_eq!(traj.termination, Termination::MaxSteps);
        assert_eq!(traj.steps, 25);
        assert!(traj.final_time < 100.0);
        assert!(traj.times.last().copied().unwrap() <= traj.final_time);
    }

    #[test]
    fn snapshots_are_right_continuous() {
        let model = birth_only(1.0);
        let cfg = RunConfig::new(Method::Direct, 50.0, 8).with_output(OutputMode::Interval(0.25));
        let (traj, _) = run(&model, &cfg).unwrap();
        assert_eq!(traj.times.len(), 201);
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(traj.populations[0], vec![0]);
        assert_eq!(traj.populations.last().unwrap(), &traj.final_state);
    }

    #[test]
    fn rejects_bad_config() {
        let model = birth_only(1.0);
        assert!(run(&model, &RunConfig::new(Method::Direct, 0.0, 1)).is_err());
        let cfg = RunConfig::new(Method::Direct, 1.0, 1).with_output(OutputMode::Interval(0.0));
        assert!(run(&model, &cfg).is_err());
        assert!(run_ensemble(&model, &RunConfig::new(Method::Direct, 1.0, 1), 0).is_err());
    }

    #[test]
    fn single_realization_ensemble_matches_run() {
        let model = birth_only(3.0);
        let cfg = RunConfig::new(Method::CompositionRejection, 4.0, 12).with_output(OutputMode::Interval(1.0));
        let (traj, _) = run(&model, &cfg).unwrap();
        let stats = run_ensemble(&model, &cfg, 1).unwrap();
        for (i, pops) in traj.populations.iter().enumerate() {
            assert_eq!(stats.mean(i, 0), pops[0] as f64);
        }
    }

    #[test]
    fn trajectory_csv_header() {
        let model = birth_only(1.0);
        let cfg = RunConfig::new(Method::Direct, 1.0, 1).with_output(OutputMode::Interval(0.5));
        let (traj, _) = run(&model, &cfg).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(model.network.species(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,A"));
        assert_eq!(lines.count(), 3);
    }
}
