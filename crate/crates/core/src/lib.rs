//! Pseudo-spectral simulation of one-dimensional wavepackets under linear,
//! density-functional and Doebner-Goldin dynamics, with the diagnostics
//! needed to test the Ehrenfest theorem, the field-momentum law and Galilean
//! covariance numerically.
//!
//! Units have `hbar = 1`. Space is a periodic interval sampled on a
//! power-of-two grid; all spatial derivatives are spectral.

pub mod error;
pub mod experiments;
pub mod galilean;
pub mod grid;
pub mod integrators;
pub mod models;
pub mod observables;
pub mod output;
pub mod potentials;
pub mod scenario;
pub mod states;

pub use error::{Error, Result};
pub use experiments::{
    check, experiment, preset_names, run_experiment, run_scenario, Outcome, Report, RunOutcome,
    RunReport, PRESETS,
};
pub use galilean::{boost, covariance_error};
pub use grid::{ComplexField, Derivative, Grid, RealField};
pub use integrators::{evolve, propagate, run, Scheme, StepperConfig};
pub use models::{Family, Kernel, Model};
pub use observables::{ObservableRecord, RealSeries, TimeSeries};
pub use potentials::{GradientMode, Potential};
pub use scenario::{Scenario, StateSpec, SCHEMA};
pub use states::GaussianPacket;
