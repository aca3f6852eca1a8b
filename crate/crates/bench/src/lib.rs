//! Shared fixtures for the kernel benchmarks in `benches/`.

use phlab::{presets, Scenario};

/// The nominal closed loop cut down to `horizon` seconds.
pub fn nominal_scenario(horizon: f64) -> Scenario {
    presets::load("cuk-nominal")
        .and_then(|d| d.with_override("scenario.horizon", horizon.into()))
        .and_then(|d| d.to_scenario())
        .expect("nominal preset builds")
}
