//! TOML scenario documents.
//!
//! Sections: `model`, `controller`, `observers` (array of tables),
//! `scenario`, `output`, and an optional `runs` array describing variants of
//! the base document as dotted-path overrides. Unknown keys are rejected and
//! all physical quantities are SI. Initial states are given in co-energy
//! units (A, V).
//!
//! ```toml
//! [model]
//! kind = "cuk"
//!
//! [controller]
//! kind = "pi-pbc"
//! kp = 10.0
//! ki = 5.0
//!
//! [[observers]]
//! name = "fct"
//! kind = "fct-gpebo"
//! gamma = 1e12
//!
//! [scenario]
//! reference = -15.0
//! x0 = [0.75, 15.0, -1.5, -18.0]
//! ```

use serde::{Deserialize, Serialize};

use crate::control::Saturation;
use crate::cuk::{CukParams, RootPolicy};
use crate::error::ConfigError;
use crate::model::RawModel;
use crate::observers::{Coordinates, GradientMode, ObserverSpec};
use crate::sim::{
    ControlUpdate, ControllerSpec, Event, EventKind, Feedback, IntegratorInit, MetricTolerances, ObserverEntry,
    PlantSpec, Scenario, CUK_INITIAL_CONDITIONS,
};
use crate::{Matrix, Vector};

/// Row-major nested array.
pub type NestedMatrix = Vec<Vec<f64>>;

/// Either a scalar (meaning `s·I`) or a full matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrMatrix {
    Scalar(f64),
    Matrix(NestedMatrix),
}

impl ScalarOrMatrix {
    fn to_matrix(&self, n: usize, what: &str) -> Result<Matrix, ConfigError> {
        match self {
            Self::Scalar(s) => Ok(Matrix::identity(n, n) * *s),
            Self::Matrix(rows) => {
                let m = nested_to_matrix(rows, what)?;
                if m.shape() != (n, n) {
                    return Err(ConfigError::Invalid(format!("{what} must be {n}x{n}")));
                }
                Ok(m)
            }
        }
    }
}

fn nested_to_matrix(rows: &NestedMatrix, what: &str) -> Result<Matrix, ConfigError> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(ConfigError::Invalid(format!("{what}: rows have different lengths")));
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    #[default]
    Cuk,
    Matrices,
}

/// Generic model as named nested arrays; `j` and `g` list `J₀…J_m`, `G₀…G_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatricesConfig {
    pub j: Vec<NestedMatrix>,
    pub r: NestedMatrix,
    pub q: NestedMatrix,
    pub g: Vec<NestedMatrix>,
    pub e: Vec<f64>,
    pub c: NestedMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    /// Operating point in storage variables.
    pub x_star: Vec<f64>,
    pub u_star: Vec<f64>,
}

impl MatricesConfig {
    pub fn to_raw(&self) -> Result<RawModel, ConfigError> {
        let list = |ms: &[NestedMatrix], w: &str| ms.iter().map(|m| nested_to_matrix(m, w)).collect::<Result<Vec<_>, _>>();
        Ok(RawModel {
            j: list(&self.j, "model.matrices.j")?,
            r: nested_to_matrix(&self.r, "model.matrices.r")?,
            q: nested_to_matrix(&self.q, "model.matrices.q")?,
            g: list(&self.g, "model.matrices.g")?,
            e: Vector::from_column_slice(&self.e),
            c: nested_to_matrix(&self.c, "model.matrices.c")?,
            labels: self.labels.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default)]
    pub kind: ModelKind,
    #[serde(default)]
    pub root_policy: RootPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<CukParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<MatricesConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    #[default]
    PiPbc,
    ClassicalPi,
    OpenLoop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum IntegratorInitConfig {
    /// `"zero"` or `"equilibrium"`.
    Named(String),
    Value(Vec<f64>),
}

fn default_u_min() -> f64 {
    Saturation::default().min
}

fn default_u_max() -> f64 {
    Saturation::default().max
}

fn default_feedback() -> String {
    "full-state".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerConfig {
    #[serde(default)]
    pub kind: ControllerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kp: Option<ScalarOrMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ki: Option<ScalarOrMatrix>,
    #[serde(default = "default_u_min")]
    pub u_min: f64,
    #[serde(default = "default_u_max")]
    pub u_max: f64,
    /// Duty ratio for `open-loop`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Vec<f64>>,
    #[serde(default)]
    pub update: ControlUpdate,
    /// `"full-state"` or the name of an observer.
    #[serde(default = "default_feedback")]
    pub feedback: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xc0: Option<IntegratorInitConfig>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            kind: ControllerKind::PiPbc,
            kp: None,
            ki: None,
            u_min: default_u_min(),
            u_max: default_u_max(),
            u: None,
            update: ControlUpdate::Hold,
            feedback: default_feedback(),
            xc0: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObserverKind {
    FctGpebo,
    /// Asymptotic GPEBO (`x̂ = ξ + Φθ̂`).
    Gpebo,
    Emulator,
    Kbf,
    Gradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverConfig {
    pub name: String,
    pub kind: ObserverKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<ScalarOrMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h0: Option<ScalarOrMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<GradientMode>,
    #[serde(default)]
    pub coordinates: Coordinates,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_hat0: Option<Vec<f64>>,
}

impl ObserverConfig {
    pub fn to_spec(&self, n: usize) -> Result<ObserverSpec, ConfigError> {
        let lambda = self.lambda.unwrap_or(5.0);
        let identity = ScalarOrMatrix::Scalar(1.0);
        Ok(match self.kind {
            ObserverKind::FctGpebo => {
                ObserverSpec::FctGpebo { lambda, gamma: self.gamma.unwrap_or(1e12), mu: self.mu.unwrap_or(1e-6) }
            }
            ObserverKind::Gpebo => ObserverSpec::AsymptoticGpebo { lambda, gamma: self.gamma.unwrap_or(1e17) },
            ObserverKind::Emulator => ObserverSpec::Emulator,
            ObserverKind::Kbf => ObserverSpec::Kbf {
                s: self.s.as_ref().unwrap_or(&identity).to_matrix(n, "kbf s")?,
                h0: self.h0.as_ref().unwrap_or(&identity).to_matrix(n, "kbf h0")?,
            },
            ObserverKind::Gradient => ObserverSpec::Gradient {
                lambda,
                gamma: self.gamma.unwrap_or(1e8),
                mode: self.mode.unwrap_or_default(),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventConfig {
    pub time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load: Option<f64>,
}

fn default_horizon() -> f64 {
    0.05
}

fn default_step() -> f64 {
    1e-6
}

fn default_stride() -> usize {
    50
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Output-voltage reference `x₄*` (V), Ćuk only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    /// Initial plant state in co-energy units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub events: Vec<EventConfig>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            reference: None,
            x0: None,
            horizon: default_horizon(),
            step: default_step(),
            stride: default_stride(),
            events: Vec::new(),
        }
    }
}

fn default_name() -> String {
    "run".into()
}

fn default_true() -> bool {
    true
}

fn default_band() -> f64 {
    0.01
}

fn default_checkpoints() -> Vec<f64> {
    MetricTolerances::default().checkpoints
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default = "default_true")]
    pub csv: bool,
    #[serde(default = "default_true")]
    pub svg: bool,
    #[serde(default = "default_true")]
    pub metrics: bool,
    /// Relative settling band.
    #[serde(default = "default_band")]
    pub band: f64,
    #[serde(default = "default_checkpoints")]
    pub checkpoints: Vec<f64>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            name: default_name(),
            dir: None,
            csv: true,
            svg: true,
            metrics: true,
            band: default_band(),
            checkpoints: default_checkpoints(),
        }
    }
}

/// A named variant: dotted-path overrides applied to the base document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "toml::Table::is_empty")]
    pub set: toml::Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(default = "default_model")]
    pub model: ModelConfig,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observers: Vec<ObserverConfig>,
    #[serde(default)]
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<RunConfig>,
}

fn default_model() -> ModelConfig {
    ModelConfig { kind: ModelKind::Cuk, root_policy: RootPolicy::Smallest, params: None, matrices: None }
}

impl Default for ConfigDocument {
    fn default() -> Self {
        Self {
            model: default_model(),
            controller: ControllerConfig::default(),
            observers: Vec::new(),
            scenario: ScenarioConfig::default(),
            output: OutputConfig::default(),
            runs: Vec::new(),
        }
    }
}

/// Parses the right-hand side of `key=value`: a TOML literal if it parses,
/// otherwise a bare string.
pub fn parse_value(text: &str) -> toml::Value {
    let text = text.trim();
    match format!("v = {text}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(text.into())),
        Err(_) => toml::Value::String(text.into()),
    }
}

/// Sets `path` (dot-separated; numeric segments index arrays) inside `root`.
/// Intermediate nodes must exist; the last segment may add a key to a table.
pub fn set_path(root: &mut toml::Value, path: &str, value: toml::Value) -> Result<(), ConfigError> {
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(ConfigError::Path(path.into()));
    }
    let mut node = root;
    for (k, seg) in segments.iter().enumerate() {
        let last = k + 1 == segments.len();
        node = match node {
            toml::Value::Table(t) => {
                if last {
                    t.insert(seg.to_string(), value);
                    return Ok(());
                }
                t.get_mut(*seg).ok_or_else(|| ConfigError::Path(path.into()))?
            }
            toml::Value::Array(a) => {
                let i: usize = seg.parse().map_err(|_| ConfigError::Path(path.into()))?;
                let slot = a.get_mut(i).ok_or_else(|| ConfigError::Path(path.into()))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(ConfigError::Path(path.into())),
        };
    }
    Err(ConfigError::Path(path.into()))
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl ConfigDocument {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let doc: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        doc.check()?;
        Ok(doc)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Canonical serialization; parsing it yields an equal document.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config documents are always representable in TOML")
    }

    pub fn to_value(&self) -> toml::Value {
        toml::Value::try_from(self).expect("config documents are always representable in TOML")
    }

    pub fn from_value(value: toml::Value) -> Result<Self, ConfigError> {
        let doc: Self = value.try_into().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        doc.check()?;
        Ok(doc)
    }

    /// Copy with `path` set to `value`.
    pub fn with_override(&self, path: &str, value: toml::Value) -> Result<Self, ConfigError> {
        let mut v = self.to_value();
        set_path(&mut v, path, value)?;
        Self::from_value(v).map_err(|e| match e {
            ConfigError::Parse(msg) if msg.contains("unknown field") => ConfigError::Path(path.into()),
            other => other,
        })
    }

    /// Applies a `key=value` assignment.
    pub fn apply_assignment(&self, assignment: &str) -> Result<Self, ConfigError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| ConfigError::Invalid(format!("expected key=value, got `{assignment}`")))?;
        self.with_override(key.trim(), parse_value(value))
    }

    /// Consistency checks beyond what the schema enforces.
    fn check(&self) -> Result<(), ConfigError> {
        let mut seen = std::collections::HashSet::new();
        for o in &self.observers {
            if !valid_name(&o.name) {
                return Err(ConfigError::Invalid(format!(
                    "observer name `{}` must be non-empty ASCII letters, digits, `-` or `_`",
                    o.name
                )));
            }
            if !seen.insert(o.name.as_str()) {
                return Err(ConfigError::Invalid(format!("duplicate observer name `{}`", o.name)));
            }
        }
        for e in &self.scenario.events {
            if e.reference.is_some() == e.load.is_some() {
                return Err(ConfigError::Invalid(format!(
                    "event at t = {} must set exactly one of `reference` or `load`",
                    e.time
                )));
            }
        }
        match self.model.kind {
            ModelKind::Cuk if self.model.matrices.is_some() => {
                return Err(ConfigError::Invalid("`model.matrices` requires kind = \"matrices\"".into()))
            }
            ModelKind::Matrices if self.model.matrices.is_none() => {
                return Err(ConfigError::Invalid("kind = \"matrices\" requires a `model.matrices` table".into()))
            }
            _ => {}
        }
        if !valid_name(&self.output.name) {
            return Err(ConfigError::Invalid(format!("output name `{}` is not a valid file stem", self.output.name)));
        }
        for r in &self.runs {
            if !valid_name(&r.name) {
                return Err(ConfigError::Invalid(format!("run name `{}` is not a valid file stem", r.name)));
            }
        }
        Ok(())
    }

    /// Documents to execute: one per `runs` entry, or the document itself.
    pub fn variants(&self) -> Result<Vec<(String, ConfigDocument)>, ConfigError> {
        if self.runs.is_empty() {
            return Ok(vec![(self.output.name.clone(), self.clone())]);
        }
        let mut base = self.clone();
        base.runs.clear();
        self.runs
            .iter()
            .map(|run| {
                let mut doc = base.clone();
                for (path, value) in &run.set {
                    doc = doc.with_override(path, value.clone())?;
                }
                doc.output.name = run.name.clone();
                Ok((run.name.clone(), doc))
            })
            .collect()
    }

    pub fn cuk_params(&self) -> CukParams {
        self.model.params.unwrap_or_default()
    }

    pub fn tolerances(&self) -> MetricTolerances {
        let mu = self
            .observers
            .iter()
            .find(|o| o.kind == ObserverKind::FctGpebo)
            .and_then(|o| o.mu)
            .unwrap_or(1e-6);
        MetricTolerances { band: self.output.band, checkpoints: self.output.checkpoints.clone(), mu, ..Default::default() }
    }

    /// Builds the runnable scenario; model validation errors surface here.
    pub fn to_scenario(&self) -> Result<Scenario, ConfigError> {
        let sc = &self.scenario;
        let plant = match self.model.kind {
            ModelKind::Cuk => PlantSpec::Cuk {
                params: self.cuk_params(),
                reference: sc.reference.unwrap_or(-15.0),
                policy: self.model.root_policy,
            },
            ModelKind::Matrices => {
                let mc = self.model.matrices.as_ref().expect("checked at parse time");
                let model = mc.to_raw()?.validate()?;
                if sc.reference.is_some() {
                    return Err(ConfigError::Invalid("`scenario.reference` applies to the cuk model only".into()));
                }
                PlantSpec::Generic {
                    x_star: Vector::from_column_slice(&mc.x_star),
                    u_star: mc.u_star.clone(),
                    model,
                }
            }
        };
        let (n, m) = match &plant {
            PlantSpec::Cuk { .. } => (4, 1),
            PlantSpec::Generic { model, .. } => (model.n(), model.m()),
        };
        let c = &self.controller;
        let saturation = Saturation { min: c.u_min, max: c.u_max };
        let scalar = |g: &Option<ScalarOrMatrix>, default: f64, what: &str| -> Result<f64, ConfigError> {
            match g {
                None => Ok(default),
                Some(ScalarOrMatrix::Scalar(v)) => Ok(*v),
                Some(_) => Err(ConfigError::Invalid(format!("classical PI {what} must be a scalar"))),
            }
        };
        let controller = match c.kind {
            ControllerKind::PiPbc => ControllerSpec::PiPbc {
                kp: c.kp.clone().unwrap_or(ScalarOrMatrix::Scalar(10.0)).to_matrix(m, "controller.kp")?,
                ki: c.ki.clone().unwrap_or(ScalarOrMatrix::Scalar(5.0)).to_matrix(m, "controller.ki")?,
                saturation,
            },
            ControllerKind::ClassicalPi => ControllerSpec::ClassicalPi {
                kp: scalar(&c.kp, 0.008, "kp")?,
                ki: scalar(&c.ki, 8.0, "ki")?,
                saturation,
            },
            ControllerKind::OpenLoop => ControllerSpec::OpenLoop {
                u: c.u.clone().ok_or_else(|| ConfigError::Invalid("open-loop controller needs `u`".into()))?,
            },
        };
        let feedback = if c.feedback == "full-state" {
            Feedback::FullState
        } else {
            let i = self
                .observers
                .iter()
                .position(|o| o.name == c.feedback)
                .ok_or_else(|| ConfigError::Invalid(format!("feedback observer `{}` is not configured", c.feedback)))?;
            Feedback::Observer(i)
        };
        let xc0 = match &c.xc0 {
            None => IntegratorInit::Zero,
            Some(IntegratorInitConfig::Named(s)) if s == "zero" => IntegratorInit::Zero,
            Some(IntegratorInitConfig::Named(s)) if s == "equilibrium" => IntegratorInit::Equilibrium,
            Some(IntegratorInitConfig::Named(s)) => {
                return Err(ConfigError::Invalid(format!("xc0 must be \"zero\", \"equilibrium\" or an array, got `{s}`")))
            }
            Some(IntegratorInitConfig::Value(v)) => IntegratorInit::Value(Vector::from_column_slice(v)),
        };
        let observers = self
            .observers
            .iter()
            .map(|o| {
                Ok(ObserverEntry {
                    name: o.name.clone(),
                    spec: o.to_spec(n)?,
                    coordinates: o.coordinates,
                    xi0: o.xi0.as_deref().map(Vector::from_column_slice),
                    theta_hat0: o.theta_hat0.as_deref().map(Vector::from_column_slice),
                })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let x0 = match (&sc.x0, self.model.kind) {
            (Some(v), _) => Vector::from_column_slice(v),
            (None, ModelKind::Cuk) => Vector::from_column_slice(&CUK_INITIAL_CONDITIONS[2]),
            (None, ModelKind::Matrices) => Vector::zeros(n),
        };
        let events = sc
            .events
            .iter()
            .map(|e| Event {
                time: e.time,
                kind: match (e.reference, e.load) {
                    (Some(v), _) => EventKind::Reference(v),
                    (None, Some(r)) => EventKind::Load(r),
                    (None, None) => unreachable!("checked at parse time"),
                },
            })
            .collect();
        let scenario = Scenario {
            plant,
            controller,
            feedback,
            observers,
            x0,
            xc0,
            horizon: sc.horizon,
            step: sc.step,
            stride: sc.stride,
            events,
            update: c.update,
        };
        scenario.validate().map_err(ConfigError::Invalid)?;
        Ok(scenario)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[model]
kind = "cuk"

[controller]
kind = "pi-pbc"
kp = 10.0
ki = 5
feedback = "fct"

[[observers]]
name = "fct"
kind = "fct-gpebo"
gamma = 1e12

[[observers]]
name = "kbf"
kind = "kbf"
s = 1.0
h0 = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]]

[scenario]
reference = -15.0
step = 1e-7
events = [{ time = 0.015, reference = -5.0 }]
"#;

    #[test]
    fn parses_and_builds() {
        let doc = ConfigDocument::from_toml_str(SAMPLE).unwrap();
        let s = doc.to_scenario().unwrap();
        assert_eq!(s.feedback, Feedback::Observer(0));
        assert_eq!(s.events.len(), 1);
        assert_eq!(s.observers[1].spec, ObserverSpec::Kbf { s: Matrix::identity(4, 4), h0: Matrix::identity(4, 4) });
        assert_eq!(s.x0, Vector::from_column_slice(&CUK_INITIAL_CONDITIONS[2]));
    }

    #[test]
    fn canonical_round_trip() {
        let doc = ConfigDocument::from_toml_str(SAMPLE).unwrap();
        let text = doc.to_toml_string();
        let back = ConfigDocument::from_toml_str(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.to_toml_string(), text);
    }

    #[test]
    fn rejects_unknown_keys() {
        let err = ConfigDocument::from_toml_str("[scenario]\nhorizonn = 1.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse(_)), "{err}");
        assert!(ConfigDocument::from_toml_str("[bogus]\n").is_err());
    }

    #[test]
    fn overrides() {
        let doc = ConfigDocument::from_toml_str(SAMPLE).unwrap();
        let d = doc.apply_assignment("observers.0.gamma=1e10").unwrap();
        assert_eq!(d.observers[0].gamma, Some(1e10));
        let d = doc.apply_assignment("scenario.x0=[0.5, 10, -1, -12]").unwrap();
        assert_eq!(d.scenario.x0, Some(vec![0.5, 10.0, -1.0, -12.0]));
        assert!(matches!(doc.apply_assignment("observers.7.gamma=1"), Err(ConfigError::Path(_))));
        assert!(matches!(doc.apply_assignment("scenario.nope=1"), Err(ConfigError::Path(_))));
        assert!(doc.apply_assignment("no-equals-sign").is_err());
    }

    #[test]
    fn value_parsing() {
        assert_eq!(parse_value("1e10"), toml::Value::Float(1e10));
        assert_eq!(parse_value("3"), toml::Value::Integer(3));
        assert_eq!(parse_value("hold"), toml::Value::String("hold".into()));
        assert_eq!(parse_value("\"fct\""), toml::Value::String("fct".into()));
    }

    #[test]
    fn variants_apply_overrides() {
        let text = format!(
            "{SAMPLE}\n[[runs]]\nname = \"a\"\nset = {{ \"observers.0.gamma\" = 1e10 }}\n\n[[runs]]\nname = \"b\"\n"
        );
        let doc = ConfigDocument::from_toml_str(&text).unwrap();
        let v = doc.variants().unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].1.observers[0].gamma, Some(1e10));
        assert_eq!(v[1].1.observers[0].gamma, Some(1e12));
        assert!(v[0].1.runs.is_empty());
        assert_eq!(v[1].1.output.name, "b");
    }

    #[test]
    fn semantic_errors() {
        let bad_event = "[scenario]\nevents = [{ time = 0.01 }]\n";
        assert!(matches!(ConfigDocument::from_toml_str(bad_event), Err(ConfigError::Invalid(_))));
        let dup = "[[observers]]\nname = \"a\"\nkind = \"emulator\"\n[[observers]]\nname = \"a\"\nkind = \"emulator\"\n";
        assert!(ConfigDocument::from_toml_str(dup).is_err());
        let doc = ConfigDocument::from_toml_str("[controller]\nfeedback = \"ghost\"\n").unwrap();
        assert!(doc.to_scenario().is_err());
        let doc = ConfigDocument::from_toml_str("[controller]\nkind = \"open-loop\"\n").unwrap();
        assert!(doc.to_scenario().is_err());
    }

    #[test]
    fn matrices_model() {
        let text = r#"
[model]
kind = "matrices"
[model.matrices]
j = [[[0.0, -1.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]
r = [[1.0, 0.0], [0.0, 0.5]]
q = [[1.0, 0.0], [0.0, 2.0]]
g = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]
e = [1.0, 0.0]
c = [[0.0, 1.0]]
x_star = [0.4, 0.4]
u_star = [0.5]
[controller]
kind = "open-loop"
u = [0.5]
"#;
        let doc = ConfigDocument::from_toml_str(text).unwrap();
        let s = doc.to_scenario().unwrap();
        assert!(matches!(s.plant, PlantSpec::Generic { .. }));
        let bad = text.replace("[1.0, 0.0], [0.0, 0.5]", "[1.0, 0.0], [1.0, 0.5]");
        let err = ConfigDocument::from_toml_str(&bad).unwrap().to_scenario().unwrap_err();
        assert!(matches!(err, ConfigError::Model(_)), "{err}");
    }
}
