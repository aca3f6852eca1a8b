//! `phlab simulate` and `phlab compare`.

use std::fs;
use std::io::Write;
use std::path::Path;

use phlab::sim::Metrics;
use phlab::{compute_metrics, ConfigDocument, SimError, Simulation, Trajectory};
use rayon::prelude::*;

use crate::plot::{self, Panel, Series};
use crate::report::{comparison_table, opt, render_table, RunReport};
use crate::{io_err, CliError};

/// One executed variant. `trajectory` is `None` when the run could not start.
#[derive(Debug)]
pub struct RunOutcome {
    pub name: String,
    pub trajectory: Option<Trajectory>,
    pub metrics: Option<Metrics>,
    pub report: Option<RunReport>,
    pub failure: Option<SimError>,
}

/// Runs one document to its horizon, keeping partial output on failure.
pub fn execute(name: &str, doc: &ConfigDocument) -> Result<RunOutcome, CliError> {
    let scenario = doc.to_scenario()?;
    let kinds: Vec<&str> = scenario.observers.iter().map(|o| o.spec.kind()).collect();
    let sim = match Simulation::new(&scenario) {
        Ok(sim) => sim,
        Err(e @ (SimError::InvalidScenario(_) | SimError::Model(_))) => {
            return Err(CliError::Simulation { run: name.into(), source: e })
        }
        Err(e) => {
            return Ok(RunOutcome { name: name.into(), trajectory: None, metrics: None, report: None, failure: Some(e) })
        }
    };
    let (traj, failure) = sim.run_partial();
    let metrics = compute_metrics(&traj, &doc.tolerances());
    let report = RunReport::new(name, &metrics, &kinds, failure.as_ref().map(|e| e.to_string()));
    Ok(RunOutcome { name: name.into(), trajectory: Some(traj), metrics: Some(metrics), report: Some(report), failure })
}

/// Executes all variants in parallel, returning them in document order.
pub fn execute_all(variants: &[(String, ConfigDocument)]) -> Result<Vec<RunOutcome>, CliError> {
    variants.par_iter().map(|(name, doc)| execute(name, doc)).collect()
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Four stacked panels: output voltage, observer errors, duty ratio and `ω`.
pub fn figure(title: &str, runs: &[(&str, &Trajectory)]) -> String {
    let mut v4 = Panel::new("output voltage", "v4 (V)", false);
    let mut err = Panel::new("observer error norm", "log10 |x_hat - x|", true);
    let mut u = Panel::new("duty ratio", "u", false);
    let mut omega = Panel::new("DREM weight omega", "omega", false);
    let multi = runs.len() > 1;
    for (run, traj) in runs {
        let label = |s: &str| if multi { format!("{run}/{s}") } else { s.to_string() };
        let pts = |f: &dyn Fn(&phlab::sim::Record) -> Option<f64>| -> Vec<(f64, f64)> {
            traj.records.iter().filter_map(|r| f(r).map(|y| (r.t, y))).collect()
        };
        let out_idx = traj.labels.len().saturating_sub(1);
        v4.series.push(Series { label: run.to_string(), points: pts(&|r| r.x.get(out_idx).copied()) });
        u.series.push(Series { label: run.to_string(), points: pts(&|r| r.u.first().copied()) });
        for (i, name) in traj.observer_names.iter().enumerate() {
            err.series.push(Series { label: label(name), points: pts(&|r| Some(r.observers[i].err_norm)) });
            let w = pts(&|r| r.observers[i].omega);
            if !w.is_empty() {
                omega.series.push(Series { label: label(name), points: w });
            }
        }
    }
    plot::render(title, &[v4, err, u, omega])
}

/// Writes CSV, metrics and the combined figure for a batch of outcomes.
fn collect(doc: &ConfigDocument, outcomes: &[RunOutcome], dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for o in outcomes {
        if let Some(traj) = &o.trajectory {
            if doc.output.csv {
                let path = dir.join(format!("{}.csv", o.name));
                let file = fs::File::create(&path).map_err(io_err(&path))?;
                traj.write_csv(std::io::BufWriter::new(file)).map_err(io_err(&path))?;
            }
        }
        if let (true, Some(report)) = (doc.output.metrics, &o.report) {
            let json = serde_json::to_vec_pretty(report).expect("reports serialize");
            write_file(&dir.join(format!("{}.metrics.json", o.name)), &json)?;
        }
    }
    let runs: Vec<(&str, &Trajectory)> =
        outcomes.iter().filter_map(|o| o.trajectory.as_ref().map(|t| (o.name.as_str(), t))).collect();
    if doc.output.svg && !runs.is_empty() {
        let svg = figure(&doc.output.name, &runs);
        write_file(&dir.join(format!("{}.svg", doc.output.name)), svg.as_bytes())?;
    }
    Ok(())
}

fn first_failure(outcomes: Vec<RunOutcome>) -> Result<(), CliError> {
    match outcomes.into_iter().find_map(|o| o.failure.map(|e| (o.name, e))) {
        Some((run, source)) => Err(CliError::Simulation { run, source }),
        None => Ok(()),
    }
}

fn summary(outcomes: &[RunOutcome]) -> String {
    let header = ["run", "settling_s", "max|u|", "t_c", "final_err", "status"].map(String::from);
    let rows: Vec<Vec<String>> = outcomes
        .iter()
        .map(|o| match &o.report {
            Some(r) => {
                let first = r.observers.first();
                vec![
                    o.name.clone(),
                    opt(r.settling_time),
                    format!("{:.4}", r.max_abs_u),
                    opt(first.and_then(|f| f.t_c)),
                    first.map_or("-".into(), |f| format!("{:.3e}", f.final_error)),
                    o.failure.as_ref().map_or("ok".into(), |e| e.to_string()),
                ]
            }
            None => {
                let status = o.failure.as_ref().map_or(String::new(), |e| e.to_string());
                vec![o.name.clone(), "-".into(), "-".into(), "-".into(), "-".into(), status]
            }
        })
        .collect();
    render_table(&header, &rows)
}

pub fn simulate(doc: &ConfigDocument, dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let variants = doc.variants()?;
    let outcomes = execute_all(&variants)?;
    collect(doc, &outcomes, dir)?;
    let stdout = |e| CliError::Io { path: "<stdout>".into(), source: e };
    write!(out, "{}", summary(&outcomes)).map_err(stdout)?;
    writeln!(out, "wrote {}", dir.display()).map_err(stdout)?;
    first_failure(outcomes)
}

pub fn compare(doc: &ConfigDocument, dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let variants = doc.variants()?;
    for (name, d) in &variants {
        if d.observers.len() < 2 {
            return Err(CliError::Usage(format!(
                "run `{name}`: comparison needs at least two observers, found {}",
                d.observers.len()
            )));
        }
    }
    let outcomes = execute_all(&variants)?;
    collect(doc, &outcomes, dir)?;
    let stdout = |e| CliError::Io { path: "<stdout>".into(), source: e };
    for o in &outcomes {
        let Some(report) = &o.report else { continue };
        let table = comparison_table(report);
        if variants.len() > 1 {
            writeln!(out, "[{}]", o.name).map_err(stdout)?;
        }
        write!(out, "{table}").map_err(stdout)?;
        write_file(&dir.join(format!("{}.compare.txt", o.name)), table.as_bytes())?;
    }
    first_failure(outcomes)
}
