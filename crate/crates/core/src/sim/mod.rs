//! Deterministic fixed-step simulation.

pub mod metrics;
pub mod rk4;
pub mod runner;
pub mod scenario;
pub mod trajectory;

pub use metrics::{compute_metrics, settling_time, MetricTolerances, Metrics, ObserverMetrics};
pub use rk4::{rk4_step, Rk4Workspace};
pub use runner::{run_scenario, Simulation};
pub use scenario::{
    ControlUpdate, ControllerSpec, Event, EventKind, Feedback, IntegratorInit, ObserverEntry, PlantSpec, Scenario,
    CUK_INITIAL_CONDITIONS,
};
pub use trajectory::{format_float, CsvError, ObserverSample, Record, Trajectory};
