//! Scenario documents shipped with the crate, one per study.

use crate::config::ConfigDocument;
use crate::error::ConfigError;

/// A named, embedded scenario document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub source: &'static str,
}

macro_rules! preset {
    ($name:literal, $summary:literal) => {
        Preset { name: $name, summary: $summary, source: include_str!(concat!("../presets/", $name, ".toml")) }
    };
}

pub const PRESETS: &[Preset] = &[
    preset!("cuk-nominal", "full-state PI-PBC at -15 V with an FCT-GPEBO monitor"),
    preset!("fig-observer-gains", "FCT-GPEBO errors for gamma in {1e10, 1e11, 1e12}"),
    preset!("fig-step", "output-feedback PI-PBC, reference -15 V -> -5 V at 15 ms"),
    preset!("fig-load-step", "output-feedback PI-PBC, load 20 -> 30 ohm at 25 ms"),
    preset!("fig-compare", "FCT-GPEBO, asymptotic GPEBO, emulator, KBF and gradient on one run"),
    preset!("fig-initial-conditions", "three initial states, measured and estimated state feedback"),
    preset!("fig-full-state", "measured-state versus certainty-equivalent PI-PBC"),
    preset!("fig-classical-pi", "PI-PBC versus classical output-voltage PI for several K_I"),
];

pub fn find(name: &str) -> Result<&'static Preset, ConfigError> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| ConfigError::UnknownPreset(name.into()))
}

/// Parsed preset document.
pub fn load(name: &str) -> Result<ConfigDocument, ConfigError> {
    ConfigDocument::from_toml_str(find(name)?.source)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_build_scenarios() {
        for p in PRESETS {
            let doc = load(p.name).unwrap_or_else(|e| panic!("{}: {e}", p.name));
            for (name, variant) in doc.variants().unwrap() {
                variant.to_scenario().unwrap_or_else(|e| panic!("{}/{name}: {e}", p.name));
            }
        }
    }

    #[test]
    fn unknown_preset() {
        assert!(matches!(load("fig-nope"), Err(ConfigError::UnknownPreset(_))));
    }
}
