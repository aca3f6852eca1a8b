//! `phlab equilibrium`: operating point table and JSON record.

use std::io::Write;

use phlab::config::ModelKind;
use phlab::cuk::{solve_equilibrium, EquilibriumQuadratic};
use phlab::model::DEFAULT_TOL;
use phlab::{ConfigDocument, EquilibriumError, EquilibriumPair, Vector};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumRecord {
    pub model: &'static str,
    pub feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discriminant: Option<f64>,
    pub candidates: Vec<f64>,
    pub oracle_roots: Vec<f64>,
    pub u_star: Vec<f64>,
    /// Operating point in co-energy units, keyed by variable name.
    pub x_star: Vec<(String, f64)>,
    pub residual_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Rounds away the last few bits so that integer-valued results print as
/// integers.
fn tidy(v: f64) -> f64 {
    let r = (v * 1e6).round() / 1e6;
    if (r - v).abs() <= 1e-9 * v.abs().max(1.0) {
        r
    } else {
        v
    }
}

pub fn record(doc: &ConfigDocument, reference: Option<f64>) -> Result<(EquilibriumRecord, Option<EquilibriumError>), CliError> {
    match doc.model.kind {
        ModelKind::Cuk => {
            let p = doc.cuk_params();
            let x4 = reference.or(doc.scenario.reference).unwrap_or(-15.0);
            let quadratic = EquilibriumQuadratic::new(&p, x4);
            let mut rec = EquilibriumRecord {
                model: "cuk",
                feasible: false,
                reference: Some(x4),
                discriminant: Some(tidy(quadratic.discriminant())),
                candidates: Vec::new(),
                oracle_roots: Vec::new(),
                u_star: Vec::new(),
                x_star: Vec::new(),
                residual_norm: None,
                error: None,
            };
            match solve_equilibrium(&p, x4, doc.model.root_policy) {
                Ok(eq) => {
                    rec.feasible = true;
                    rec.candidates = eq.candidates.clone();
                    rec.oracle_roots = eq.oracle_roots.clone();
                    rec.u_star = eq.pair.u_star.clone();
                    rec.x_star = ["i1", "v2", "i3", "v4"].iter().map(|s| s.to_string()).zip(eq.physical).collect();
                    rec.residual_norm = Some(eq.pair.residual_norm);
                    Ok((rec, None))
                }
                Err(e) => {
                    rec.error = Some(e.to_string());
                    Ok((rec, Some(e)))
                }
            }
        }
        ModelKind::Matrices => {
            if reference.is_some() {
                return Err(CliError::Usage("--reference applies to the cuk model only".into()));
            }
            let mc = doc.model.matrices.as_ref().expect("checked at parse time");
            let model = mc.to_raw()?.validate().map_err(phlab::ConfigError::from)?;
            let x_star = Vector::from_column_slice(&mc.x_star);
            let mut rec = EquilibriumRecord {
                model: "matrices",
                feasible: false,
                reference: None,
                discriminant: None,
                candidates: Vec::new(),
                oracle_roots: Vec::new(),
                u_star: mc.u_star.clone(),
                x_star: model.labels().iter().cloned().zip(model.co_energy(&x_star).iter().copied()).collect(),
                residual_norm: None,
                error: None,
            };
            if x_star.len() == model.n() && mc.u_star.len() == model.m() {
                rec.residual_norm = Some(model.equilibrium_residual(&x_star, &mc.u_star).norm());
            }
            match EquilibriumPair::certify(&model, x_star, mc.u_star.clone(), DEFAULT_TOL) {
                Ok(_) => {
                    rec.feasible = true;
                    Ok((rec, None))
                }
                Err(e) => {
                    rec.error = Some(e.to_string());
                    Ok((rec, Some(e)))
                }
            }
        }
    }
}

fn unit(label: &str) -> &'static str {
    match label.chars().next() {
        Some('i') => "A",
        Some('v') => "V",
        _ => "",
    }
}

fn list(v: &[f64]) -> String {
    if v.is_empty() {
        "-".into()
    } else {
        v.iter().map(|x| format!("{x:.12}")).collect::<Vec<_>>().join(", ")
    }
}

pub fn write_table(rec: &EquilibriumRecord, out: &mut dyn Write) -> std::io::Result<()> {
    if let Some(r) = rec.reference {
        writeln!(out, "{:<16}{r} V", "reference")?;
    }
    if let Some(d) = rec.discriminant {
        writeln!(out, "{:<16}{d}", "discriminant")?;
    }
    if rec.model == "cuk" {
        writeln!(out, "{:<16}{}", "roots in (0,1)", list(&rec.candidates))?;
        writeln!(out, "{:<16}{}", "oracle roots", list(&rec.oracle_roots))?;
    }
    if rec.feasible {
        writeln!(out, "{:<16}{}", "u*", list(&rec.u_star))?;
        for (name, v) in &rec.x_star {
            writeln!(out, "{:<16}{v:.10} {}", format!("{name}*"), unit(name))?;
        }
    }
    if let Some(r) = rec.residual_norm {
        writeln!(out, "{:<16}{r:.3e}", "residual")?;
    }
    let verdict = match (&rec.error, rec.discriminant) {
        (None, _) => "feasible".to_string(),
        (Some(_), Some(d)) if d < 0.0 => format!("infeasible (discriminant {d})"),
        (Some(e), _) => format!("infeasible ({e})"),
    };
    writeln!(out, "{:<16}{verdict}", "verdict")
}

pub fn run(doc: &ConfigDocument, reference: Option<f64>, json: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let (rec, err) = record(doc, reference)?;
    let stdout = |e| CliError::Io { path: "<stdout>".into(), source: e };
    if json {
        let text = serde_json::to_string_pretty(&rec).expect("records serialize");
        writeln!(out, "{text}").map_err(stdout)?;
    } else {
        write_table(&rec, out).map_err(stdout)?;
    }
    match err {
        None => Ok(()),
        Some(e) => Err(CliError::Infeasible(e)),
    }
}
