//! Scenario description: plant, controller, observers, initial conditions,
//! clock and events.

use serde::{Deserialize, Serialize};

use crate::control::Saturation;
use crate::cuk::{CukParams, RootPolicy};
use crate::model::PHModel;
use crate::observers::{Coordinates, ObserverSpec};
use crate::{Matrix, Vector};

#[derive(Debug, Clone, PartialEq)]
pub enum PlantSpec {
    /// Ćuk converter regulated to the output voltage `reference` (V).
    Cuk { params: CukParams, reference: f64, policy: RootPolicy },
    /// Arbitrary validated model with a user-supplied operating point.
    Generic { model: PHModel, x_star: Vector, u_star: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ControllerSpec {
    PiPbc { kp: Matrix, ki: Matrix, saturation: Saturation },
    /// Output-voltage PI; the reference is the plant's.
    ClassicalPi { kp: f64, ki: f64, saturation: Saturation },
    /// Constant duty ratio.
    OpenLoop { u: Vec<f64> },
}

impl ControllerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::PiPbc { .. } => "pi-pbc",
            Self::ClassicalPi { .. } => "classical-pi",
            Self::OpenLoop { .. } => "open-loop",
        }
    }
}

/// Which state the controller consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Feedback {
    #[default]
    FullState,
    /// Certainty-equivalent feedback from the observer at this index.
    Observer(usize),
}

/// When the duty ratio is recomputed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControlUpdate {
    /// Once per step, held over the step (zero-order hold).
    #[default]
    Hold,
    /// At every Runge–Kutta stage, i.e. the continuous-time control law.
    PerStage,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum IntegratorInit {
    #[default]
    Zero,
    /// `x_c(0) = x_c*` for the initial operating point (PI-PBC only).
    Equilibrium,
    Value(Vector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverEntry {
    pub name: String,
    pub spec: ObserverSpec,
    pub coordinates: Coordinates,
    /// `ξ(0)` (or `x̂(0)` for the KBF) in co-energy units; zero if absent.
    pub xi0: Option<Vector>,
    /// `θ̂(0)` in co-energy units; zero if absent.
    pub theta_hat0: Option<Vector>,
}

impl ObserverEntry {
    pub fn new(name: impl Into<String>, spec: ObserverSpec) -> Self {
        Self { name: name.into(), spec, coordinates: Coordinates::default(), xi0: None, theta_hat0: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    /// New output-voltage reference (V).
    Reference(f64),
    /// New load resistance (Ω).
    Load(f64),
}

impl EventKind {
    pub fn label(&self) -> String {
        match self {
            Self::Reference(v) => format!("reference={v}"),
            Self::Load(r) => format!("load={r}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub plant: PlantSpec,
    pub controller: ControllerSpec,
    pub feedback: Feedback,
    pub observers: Vec<ObserverEntry>,
    /// Initial plant state in co-energy units (currents and voltages).
    pub x0: Vector,
    pub xc0: IntegratorInit,
    pub horizon: f64,
    pub step: f64,
    pub stride: usize,
    pub events: Vec<Event>,
    pub update: ControlUpdate,
}

/// Initial condition sets used for the Ćuk studies, `(i₁, v₂, i₃, v₄)`.
pub const CUK_INITIAL_CONDITIONS: [[f64; 4]; 3] = [
    [0.5, 10.0, -1.0, -12.0],
    [0.25, 5.0, -0.5, -6.0],
    [0.75, 15.0, -1.5, -18.0],
];

impl Scenario {
    /// Full-state PI-PBC on the nominal converter at `x₄* = −15` V with
    /// `K_P = 10`, `K_I = 5`, no observers.
    pub fn cuk_default() -> Self {
        Self {
            plant: PlantSpec::Cuk { params: CukParams::default(), reference: -15.0, policy: RootPolicy::Smallest },
            controller: ControllerSpec::PiPbc {
                kp: Matrix::from_element(1, 1, 10.0),
                ki: Matrix::from_element(1, 1, 5.0),
                saturation: Saturation::default(),
            },
            feedback: Feedback::FullState,
            observers: Vec::new(),
            x0: Vector::from_column_slice(&CUK_INITIAL_CONDITIONS[2]),
            xc0: IntegratorInit::Zero,
            horizon: 0.05,
            step: 1e-6,
            stride: 50,
            events: Vec::new(),
            update: ControlUpdate::Hold,
        }
    }

    /// Number of integration steps, `round(horizon / step)`.
    pub fn steps(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }

    /// Grid index at which an event at `time` is applied.
    pub fn event_index(&self, time: f64) -> usize {
        (time / self.step).round() as usize
    }

    pub fn model_dim(&self) -> usize {
        match &self.plant {
            PlantSpec::Cuk { .. } => 4,
            PlantSpec::Generic { model, .. } => model.n(),
        }
    }

    pub fn input_dim(&self) -> usize {
        match &self.plant {
            PlantSpec::Cuk { .. } => 1,
            PlantSpec::Generic { model, .. } => model.m(),
        }
    }

    /// Structural checks that do not require solving for equilibria.
    pub fn validate(&self) -> Result<(), String> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(format!("step must be positive, got {}", self.step));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(format!("horizon must be positive, got {}", self.horizon));
        }
        if self.stride == 0 {
            return Err("stride must be at least 1".into());
        }
        if self.steps() == 0 {
            return Err("horizon is shorter than one step".into());
        }
        let (n, m) = (self.model_dim(), self.input_dim());
        if self.x0.len() != n {
            return Err(format!("x0 has length {}, model has n = {n}", self.x0.len()));
        }
        let mut last = f64::NEG_INFINITY;
        for e in &self.events {
            if !(e.time >= 0.0 && e.time <= self.horizon) {
                return Err(format!("event time {} outside [0, {}]", e.time, self.horizon));
            }
            if e.time <= last {
                return Err("event times must be strictly increasing".into());
            }
            last = e.time;
            if matches!(self.plant, PlantSpec::Generic { .. }) {
                return Err("events require the cuk plant".into());
            }
            match e.kind {
                EventKind::Reference(v) if !(v < 0.0) => return Err(format!("reference must be negative, got {v}")),
                EventKind::Load(r) if !(r > 0.0) => return Err(format!("load must be positive, got {r}")),
                _ => {}
            }
        }
        match &self.controller {
            ControllerSpec::PiPbc { kp, ki, saturation } => {
                if kp.shape() != (m, m) || ki.shape() != (m, m) {
                    return Err(format!("gains must be {m}x{m}"));
                }
                if !crate::linalg::is_symmetric(kp, 0.0) || !crate::linalg::is_symmetric(ki, 0.0) {
                    return Err("gains must be symmetric".into());
                }
                if crate::linalg::symmetric_eigen_range(kp).0 < 0.0 || crate::linalg::symmetric_eigen_range(ki).0 < 0.0 {
                    return Err("gains must be positive semidefinite".into());
                }
                if !saturation.is_valid() {
                    return Err("saturation bounds must satisfy 0 <= min < max <= 1".into());
                }
            }
            ControllerSpec::ClassicalPi { kp, ki, saturation } => {
                if m != 1 {
                    return Err("classical PI needs a single input".into());
                }
                if !(kp.is_finite() && ki.is_finite()) {
                    return Err("classical PI gains must be finite".into());
                }
                if !saturation.is_valid() {
                    return Err("saturation bounds must satisfy 0 <= min < max <= 1".into());
                }
            }
            ControllerSpec::OpenLoop { u } => {
                if u.len() != m {
                    return Err(format!("open-loop input must have length {m}"));
                }
            }
        }
        if let Feedback::Observer(i) = self.feedback {
            if i >= self.observers.len() {
                return Err(format!("feedback observer index {i} out of range"));
            }
        }
        if let IntegratorInit::Value(v) = &self.xc0 {
            if v.len() != m {
                return Err(format!("xc0 must have length {m}"));
            }
        }
        for o in &self.observers {
            o.spec.validate(n).map_err(|e| format!("observer `{}`: {e}", o.name))?;
            for v in [&o.xi0, &o.theta_hat0].into_iter().flatten() {
                if v.len() != n {
                    return Err(format!("observer `{}`: initial vectors must have length {n}", o.name));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        let s = Scenario::cuk_default();
        assert_eq!(s.validate(), Ok(()));
        assert_eq!(s.steps(), 50_000);
        assert_eq!(s.event_index(0.015), 15_000);
    }

    #[test]
    fn rejects_bad_events() {
        let mut s = Scenario::cuk_default();
        s.events = vec![
            Event { time: 0.02, kind: EventKind::Load(30.0) },
            Event { time: 0.01, kind: EventKind::Load(40.0) },
        ];
        assert!(s.validate().is_err());
        s.events = vec![Event { time: 0.2, kind: EventKind::Load(30.0) }];
        assert!(s.validate().is_err());
        s.events = vec![Event { time: 0.01, kind: EventKind::Reference(5.0) }];
        assert!(s.validate().is_err());
    }

    #[test]
    fn rejects_bad_clock_and_feedback() {
        let mut s = Scenario::cuk_default();
        s.step = 0.0;
        assert!(s.validate().is_err());
        let mut s = Scenario::cuk_default();
        s.feedback = Feedback::Observer(0);
        assert!(s.validate().is_err());
        let mut s = Scenario::cuk_default();
        s.stride = 0;
        assert!(s.validate().is_err());
    }
}
