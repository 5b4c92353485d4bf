//! Attractors and resilience measures of autonomous ODE systems.
//!
//! The library finds attractors on a tessellated state-space grid via
//! recurrences, maps sampled initial conditions to attractors with an
//! ε-proximity termination rule while recording basin labels, convergence
//! times, and initial distances, and from that data estimates local and
//! nonlocal resilience measures per attractor. A global continuation driver
//! tracks attractors and their measures along a parameter curve.

pub mod attractors;
pub mod cli;
pub mod config;
pub mod continuation;
pub mod dynsys;
pub mod error;
pub mod grid;
pub mod local;
pub mod nonlocal;
pub mod output;
pub mod systems;

pub use attractors::{map_ic_proximity, map_ic_recurrence, Attractor, AttractorStore, Label, ProximityOutcome, RecurrenceConfig};
pub use continuation::{
    global_continuation, match_attractors, measures_along_continuation, ContinuationResult, MeasureSet, ParameterCurve,
};
pub use dynsys::{integrate, jacobian, max_lyapunov, IntegratorConfig, Trajectory, VectorField};
pub use error::{ContinuationError, DynError, LocalError, MapError};
pub use grid::Grid;
pub use local::{local_measures, LocalMeasures};
pub use nonlocal::{accumulate, BasinAccumulator, IcSampler, NonlocalMeasures, UniformBoxSampler, WeightFunction};
pub use systems::SystemSpec;
