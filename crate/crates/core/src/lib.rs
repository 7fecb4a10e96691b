//! Echo state network reservoir observer for the Rossler system.
//!
//! The crate is organized around the stages of a reservoir-observer
//! experiment:
//!
//! * [`dynamics`] integrates the Rossler equations with a fixed-step RK4
//!   scheme and produces uniformly sampled [`dynamics::Trajectory`] data.
//! * [`topology`] builds the reservoir coupling matrix from one of four
//!   complex-network models and rescales it to a target spectral radius.
//! * [`reservoir`] drives the reservoir state, trains the linear readout by
//!   ridge regression, and runs observer inference (the reservoir keeps
//!   being driven by the measured input while it estimates the hidden
//!   variables).
//! * [`harness`] reproduces the experiment protocol: single-parameter
//!   sweeps over reservoir size, degree, time windows and sampling step,
//!   plus a four-topology comparison, all with deterministic per-trial
//!   seeding and MSE scoring.

pub mod dynamics;
pub mod harness;
pub mod reservoir;
pub mod seeding;
pub mod topology;

pub use dynamics::{generate_trajectory, RosslerParams, StateVec3, Trajectory};
pub use harness::{
    compare_topologies, mse, range_list, run_sweep, run_trial, ComparisonRecord, ExperimentPlan,
    SweepRecord, SweptParameter, TimeWindows,
};
pub use reservoir::{
    collect_states, init_observer, train_readout, update_state, Readout, ReservoirConfig,
    ReservoirState, TrainedObserver,
};
pub use topology::{
    assign_weights, build_skeleton, scale_to_radius, spectral_radius, TopologyKind, TopologySpec,
    WeightedMatrix,
};

/// Crate-wide error type; each module keeps its own variant group.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Dynamics(#[from] dynamics::DynamicsError),
    #[error(transparent)]
    Topology(#[from] topology::TopologyError),
    #[error(transparent)]
    Reservoir(#[from] reservoir::ReservoirError),
    #[error(transparent)]
    Harness(#[from] harness::HarnessError),
}

pub type Result<T> = std::result::Result<T, Error>;
