//! Simulation laboratory for switched power converters written in
//! port-Hamiltonian form.
//!
//! The crate provides:
//!
//! * [`model`]: the generic averaged converter model `ẋ = (J(u) − R)Qx + G(u)E`,
//!   its validation and its equilibrium algebra;
//! * [`cuk`]: the Ćuk converter instance with an analytic equilibrium solver
//!   and an independent steady-state oracle;
//! * [`control`]: the shifted-passivity PI controller (PI-PBC), a classical
//!   output-voltage PI baseline and Lyapunov instrumentation;
//! * [`observers`]: the finite-convergence-time GPEBO+DREM observer together
//!   with an emulator, a Kalman–Bucy filter and gradient estimators;
//! * [`sim`]: fixed-step RK4 integration of plant, controller and observers on
//!   one clock, scenario events, trajectories and metrics;
//! * [`config`] and [`presets`]: the declarative TOML scenario description.

pub mod config;
pub mod control;
pub mod cuk;
pub mod error;
pub mod linalg;
pub mod model;
pub mod observers;
pub mod presets;
pub mod sim;

pub use config::ConfigDocument;
pub use control::{ClassicalPiState, PiPbcState, Saturation};
pub use cuk::{CukParams, RootPolicy};
pub use error::{ConfigError, ControlError, EquilibriumError, ModelError, ObserverError, SimError};
pub use model::{EquilibriumPair, PHModel, RawModel};
pub use observers::{Coordinates, ObserverFrame, ObserverSpec};
pub use sim::{compute_metrics, run_scenario, MetricTolerances, Metrics, Scenario, Simulation, Trajectory};

/// Dense column vector used throughout the crate.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
