//! Exact stochastic simulation of chemical reaction networks.
//!
//! Seven next-event generators share one [`EventSource`] interface:
//! linear, 2D and 3D grouped direct methods, composition-rejection, the
//! binary-heap next reaction method, the constant-complexity binned-table
//! next reaction method and the next subvolume method. Well-mixed models come
//! from plain-text model files; reaction-diffusion models are flattened from a
//! local network on a periodic cubic lattice.

pub mod bench;
pub mod engine;
pub mod error;
pub mod lint;
pub mod model;
pub mod parse;
pub mod plot;
pub mod queues;
pub mod rng;
pub mod spatial;
pub mod stats;

pub use engine::{
    run, run_ensemble, EnsembleStats, OutputMode, RunConfig, SimModel, Simulation, StepCounters, Termination,
    Trajectory,
};
pub use error::{ModelError, ParseError, SimError, SpatialError};
pub use model::{Channel, DependencyGraph, KineticLaw, PropensityVector, ReactionNetwork, SystemState};
pub use parse::{parse_model, ModelFile};
pub use queues::{BinPolicy, Event, EventSource, Method, QueueCounters, SourceOptions};
pub use rng::RngStream;
