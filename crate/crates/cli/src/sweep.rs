//! `phlab sweep`: one run per value of a config entry.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use phlab::config::parse_value;
use phlab::ConfigDocument;
use rayon::prelude::*;

use crate::report::render_table;
use crate::simulate::execute;
use crate::{io_err, CliError};

/// Sweep result: one row per (variant, value), columns from the flattened
/// metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepMatrix {
    pub columns: Vec<String>,
    /// `(run, value, cells)`; `None` cells are missing metrics.
    pub rows: Vec<(String, String, Vec<Option<f64>>)>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl SweepMatrix {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("run,value");
        for c in &self.columns {
            out.push(',');
            out.push_str(&csv_field(c));
        }
        out.push('\n');
        for (run, value, cells) in &self.rows {
            out.push_str(&csv_field(run));
            out.push(',');
            out.push_str(&csv_field(value));
            for c in cells {
                out.push(',');
                if let Some(v) = c {
                    out.push_str(&phlab::sim::format_float(*v));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.2[i]).collect())
    }
}

/// Runs the sweep. Documents are built (and paths validated) before any
/// simulation starts.
pub fn sweep(doc: &ConfigDocument, param: &str, values: &[String]) -> Result<(SweepMatrix, Option<CliError>), CliError> {
    let mut jobs = Vec::new();
    for (run, base) in doc.variants()? {
        for value in values {
            let d = base.with_override(param, parse_value(value))?;
            jobs.push((run.clone(), value.clone(), d));
        }
    }
    let results: Vec<_> = jobs
        .par_iter()
        .map(|(run, value, d)| execute(&format!("{run}-{}", value_slug(value)), d))
        .collect::<Result<Vec<_>, _>>()?;

    let flats: Vec<_> = results.iter().map(|o| o.metrics.as_ref().map(|m| m.flatten()).unwrap_or_default()).collect();
    let columns: Vec<String> = flats.iter().flat_map(|f| f.keys().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
    let rows = jobs
        .iter()
        .zip(&flats)
        .map(|((run, value, _), f)| {
            let cells = columns.iter().map(|c| f.get(c).copied().flatten()).collect();
            (run.clone(), value.clone(), cells)
        })
        .collect();
    let failure = results
        .into_iter()
        .zip(&jobs)
        .find_map(|(o, (run, value, _))| o.failure.map(|e| CliError::Simulation { run: format!("{run} @ {value}"), source: e }));
    Ok((SweepMatrix { columns, rows }, failure))
}

fn value_slug(value: &str) -> String {
    value.chars().filter(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '.')).collect()
}

/// Columns shown on the terminal; the CSV carries all of them.
fn headline(columns: &[String]) -> Vec<usize> {
    columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.as_str() == "settling_time" || c.ends_with(".t_c") || c.ends_with(".final_error"))
        .map(|(i, _)| i)
        .collect()
}

pub fn run(doc: &ConfigDocument, param: &str, values: &[String], dir: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let (matrix, failure) = sweep(doc, param, values)?;
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(format!("{}-sweep.csv", doc.output.name));
    std::fs::write(&path, matrix.to_csv()).map_err(io_err(&path))?;

    let stdout = |e| CliError::Io { path: "<stdout>".into(), source: e };
    if matrix.rows.is_empty() {
        writeln!(out, "empty sweep: no values given for `{param}`").map_err(stdout)?;
    } else {
        let shown = headline(&matrix.columns);
        let mut header = vec!["run".to_string(), param.to_string()];
        header.extend(shown.iter().map(|&i| matrix.columns[i].clone()));
        let rows: Vec<Vec<String>> = matrix
            .rows
            .iter()
            .map(|(run, value, cells)| {
                let mut r = vec![run.clone(), value.clone()];
                r.extend(shown.iter().map(|&i| cells[i].map_or("-".into(), |v| format!("{v:.6}"))));
                r
            })
            .collect();
        write!(out, "{}", render_table(&header, &rows)).map_err(stdout)?;
    }
    writeln!(out, "wrote {}", path.display()).map_err(stdout)?;
    failure.map_or(Ok(()), Err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_array_values() {
        let m = SweepMatrix {
            columns: vec!["settling_time".into()],
            rows: vec![("run".into(), "[0.5, 10]".into(), vec![None])],
        };
        assert_eq!(m.to_csv(), "run,value,settling_time\nrun,\"[0.5, 10]\",\n");
    }

    #[test]
    fn empty_value_list_gives_empty_matrix() {
        let doc = phlab::presets::load("cuk-nominal").unwrap();
        let (m, failure) = sweep(&doc, "observers.0.gamma", &[]).unwrap();
        assert!(m.rows.is_empty() && failure.is_none());
    }

    #[test]
    fn invalid_path_is_rejected_before_running() {
        let doc = phlab::presets::load("cuk-nominal").unwrap();
        let err = sweep(&doc, "observers.0.nonsense", &["1".into()]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
