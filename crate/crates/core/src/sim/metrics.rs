//! Scalar summaries of a trajectory.

use std::collections::BTreeMap;

use super::trajectory::Trajectory;
use crate::observers::excitation_time;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricTolerances {
    /// Relative settling band around the reference.
    pub band: f64,
    /// Times at which observer errors are reported.
    pub checkpoints: Vec<f64>,
    /// Clipping constant used to read the excitation time off `ω`.
    pub mu: f64,
    /// Relative slack before a rise of `W` counts as a violation.
    pub w_tolerance: f64,
}

impl Default for MetricTolerances {
    fn default() -> Self {
        Self { band: 0.01, checkpoints: vec![0.01, 0.03, 0.05], mu: 1e-6, w_tolerance: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverMetrics {
    pub name: String,
    pub t_c: Option<f64>,
    /// `(checkpoint, ‖x̂ − x‖)` at the sample nearest each checkpoint.
    pub errors: Vec<(f64, f64)>,
    pub final_error: f64,
    pub final_relative_error: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// First time after which the output stays within the band; `None` if it
    /// is outside the band at the last sample.
    pub settling_time: Option<f64>,
    pub max_abs_u: f64,
    pub saturated_steps: usize,
    pub saturated_samples: usize,
    pub w_violations: usize,
    pub final_output: f64,
    pub observers: Vec<ObserverMetrics>,
}

impl Metrics {
    /// Flat key-value form; absent values map to `None`.
    pub fn flatten(&self) -> BTreeMap<String, Option<f64>> {
        let mut out = BTreeMap::new();
        out.insert("settling_time".into(), self.settling_time);
        out.insert("max_abs_u".into(), Some(self.max_abs_u));
        out.insert("saturated_steps".into(), Some(self.saturated_steps as f64));
        out.insert("saturated_samples".into(), Some(self.saturated_samples as f64));
        out.insert("w_violations".into(), Some(self.w_violations as f64));
        out.insert("final_output".into(), Some(self.final_output));
        for o in &self.observers {
            out.insert(format!("{}.t_c", o.name), o.t_c);
            for (t, e) in &o.errors {
                out.insert(format!("{}.err@{t}", o.name), Some(*e));
            }
            out.insert(format!("{}.final_error", o.name), Some(o.final_error));
            out.insert(format!("{}.final_relative_error", o.name), Some(o.final_relative_error));
            out.insert(format!("{}.seconds", o.name), Some(o.seconds));
        }
        out
    }
}

/// Output channel used for regulation metrics: the last state component
/// (`v₄` for the Ćuk converter).
fn output(r: &super::trajectory::Record) -> f64 {
    r.x[r.x.len() - 1]
}

/// Settling time of the output into `±band·|reference|`.
pub fn settling_time(traj: &Trajectory, band: f64) -> Option<f64> {
    let outside = |r: &super::trajectory::Record| (output(r) - r.reference).abs() > band * r.reference.abs();
    let last = traj.records.last()?;
    if outside(last) {
        return None;
    }
    match traj.records.iter().rposition(outside) {
        None => Some(traj.records[0].t),
        Some(i) => Some(traj.records[i + 1].t),
    }
}

pub fn compute_metrics(traj: &Trajectory, tol: &MetricTolerances) -> Metrics {
    let records = &traj.records;
    let max_abs_u = records.iter().flat_map(|r| r.u.iter()).fold(0.0f64, |a, u| a.max(u.abs()));
    let saturated_samples = records.iter().filter(|r| r.saturated).count();

    let mut w_violations = 0;
    for w in records.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.saturated || b.saturated || b.event.is_some() {
            continue;
        }
        if let (Some(wa), Some(wb)) = (a.w, b.w) {
            if wb > wa + tol.w_tolerance * wa.abs().max(1e-300) {
                w_violations += 1;
            }
        }
    }

    let observers = traj
        .observer_names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let t_c = excitation_time(
                records.iter().filter_map(|r| r.observers[i].omega.map(|w| (r.t, w))),
                tol.mu,
            );
            let errors = tol
                .checkpoints
                .iter()
                .filter_map(|&c| {
                    let r = records.iter().min_by(|a, b| (a.t - c).abs().total_cmp(&(b.t - c).abs()))?;
                    Some((c, r.observers[i].err_norm))
                })
                .collect();
            let last = records.last();
            let final_error = last.map_or(0.0, |r| r.observers[i].err_norm);
            let final_relative_error = last.map_or(0.0, |r| r.observers[i].err_norm / r.x.norm());
            ObserverMetrics {
                name: name.clone(),
                t_c,
                errors,
                final_error,
                final_relative_error,
                seconds: traj.observer_seconds.get(i).copied().unwrap_or(0.0),
            }
        })
        .collect();

    Metrics {
        settling_time: settling_time(traj, tol.band),
        max_abs_u,
        saturated_steps: traj.saturated_steps,
        saturated_samples,
        w_violations,
        final_output: records.last().map_or(f64::NAN, output),
        observers,
    }
}
