//! Serializable metrics records and plain-text tables.

use std::collections::BTreeMap;

use phlab::sim::{Metrics, ObserverMetrics};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObserverReport {
    pub name: String,
    pub kind: String,
    pub t_c: Option<f64>,
    /// Checkpoint time (as written) to `‖x̂ − x‖`.
    pub errors: BTreeMap<String, f64>,
    pub final_error: f64,
    pub final_relative_error: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub run: String,
    pub settling_time: Option<f64>,
    pub max_abs_u: f64,
    pub saturated_steps: usize,
    pub saturated_samples: usize,
    pub w_violations: usize,
    pub final_output: f64,
    pub observers: Vec<ObserverReport>,
    /// Set when the run stopped early; metrics then cover the partial run.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

fn observer_report(o: &ObserverMetrics, kind: &str) -> ObserverReport {
    ObserverReport {
        name: o.name.clone(),
        kind: kind.to_string(),
        t_c: o.t_c,
        errors: o.errors.iter().map(|(t, e)| (t.to_string(), *e)).collect(),
        final_error: o.final_error,
        final_relative_error: o.final_relative_error,
        seconds: o.seconds,
    }
}

impl RunReport {
    /// `kinds` gives the observer kind for each entry of `m.observers`.
    pub fn new(run: &str, m: &Metrics, kinds: &[&str], failure: Option<String>) -> Self {
        Self {
            run: run.to_string(),
            settling_time: m.settling_time,
            max_abs_u: m.max_abs_u,
            saturated_steps: m.saturated_steps,
            saturated_samples: m.saturated_samples,
            w_violations: m.w_violations,
            final_output: m.final_output,
            observers: m.observers.iter().zip(kinds).map(|(o, k)| observer_report(o, k)).collect(),
            failure,
        }
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.6}"))
}

/// Left-aligned fixed-width table.
pub fn render_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(header);
    out.push('\n');
    for r in rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    out
}

/// Observer comparison: one row per observer.
pub fn comparison_table(report: &RunReport) -> String {
    let checkpoints: Vec<String> = report.observers.first().map(|o| o.errors.keys().cloned().collect()).unwrap_or_default();
    let mut header = vec!["observer".to_string(), "kind".into(), "t_c".into()];
    header.extend(checkpoints.iter().map(|c| format!("err@{c}")));
    header.extend(["final".to_string(), "seconds".into()]);
    let rows: Vec<Vec<String>> = report
        .observers
        .iter()
        .map(|o| {
            let mut row = vec![o.name.clone(), o.kind.clone(), opt(o.t_c)];
            row.extend(checkpoints.iter().map(|c| o.errors.get(c).map_or("-".into(), |e| format!("{e:.3e}"))));
            row.push(format!("{:.3e}", o.final_error));
            row.push(format!("{:.3}", o.seconds));
            row
        })
        .collect();
    render_table(&header, &rows)
}
