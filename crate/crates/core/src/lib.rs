//! Deterministic, seedable simulator for asynchronous distributed optimization
//! by dual decomposition.
//!
//! A set of agents minimizes a sum of convex (possibly non-smooth) local costs
//! coupled by per-edge selection-matrix equality constraints. The coupling is
//! relaxed into per-edge dual blocks which are driven by block coordinate
//! supergradient ascent: each step an activation mask picks the edges that
//! update, every active edge moves along its block of the supergradient with
//! its own local stepsize, and the supergradient may be corrupted by noise.
//!
//! The crate provides
//!
//! - [`graph`]: the agent network, the oriented edge set and dual ownership,
//! - [`problem`]: primal costs, box sets, selection maps, Lagrangian and dual,
//! - [`oracle`]: exact scalar minimizers for the supported cost families,
//! - [`engine`]: supergradients, synchronous/asynchronous dual updates and
//!   stepsize schedules with local clocks,
//! - [`scheduler`]: activation protocols (synchronous, i.i.d., cyclic,
//!   persistently exciting, adaptive-counter, scripted),
//! - [`noise`]: supergradient error models (zero-mean and biased),
//! - [`runtime`]: the simulation loop, traces, metrics and runtime monitors,
//! - [`mod@reference`]: independent ground-truth oracles used for gap metrics,
//! - [`experiment`]: experiment specs, variant suites and artifact export.
//!
//! Every run is bitwise reproducible from its configuration and seed.

pub mod engine;
pub mod experiment;
pub mod graph;
pub mod noise;
pub mod oracle;
pub mod problem;
pub mod reference;
pub mod runtime;
pub mod scheduler;

mod rng;

#[cfg(doctest)]
mod book;

pub use engine::{DualState, StepsizePlan, StepsizeRule, Supergradient};
pub use graph::Topology;
pub use noise::NoiseSpec;
pub use problem::{CostAtom, Interval, LocalProblem, ProblemInstance, SelectionMap};
pub use reference::Reference;
pub use runtime::{MonitorReport, RunConfig, Trace};
pub use scheduler::SchedulerSpec;
