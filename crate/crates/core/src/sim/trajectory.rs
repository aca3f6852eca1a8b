//! Sampled simulation output and its CSV form.
//!
//! Column order: `t`, the plant state in co-energy units (`i1, v2, i3, v4`
//! for the Ćuk converter), `u`, `ytilde`, `W`, then for each observer
//! `{name}.ihat1 … {name}.vhat4, {name}.err_norm, {name}.omega,
//! {name}.Delta`, then `saturated`, `event`, `reference`. Missing values are
//! empty fields. Floats are written in shortest round-trip form, so parsing a
//! written file reproduces every sample bit for bit.

use std::fmt::Write as _;

use crate::Vector;

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverSample {
    /// Estimate in co-energy units.
    pub x_hat: Vector,
    /// `‖x̂ − x‖` in co-energy units.
    pub err_norm: f64,
    pub omega: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub t: f64,
    /// Plant state in co-energy units.
    pub x: Vector,
    pub u: Vec<f64>,
    /// Passive output `𝒞(x − x*)` at the active operating point.
    pub ytilde: Vec<f64>,
    /// PI-PBC storage function; absent for other controllers.
    pub w: Option<f64>,
    pub observers: Vec<ObserverSample>,
    pub saturated: bool,
    /// Event applied at this grid instant, if sampled.
    pub event: Option<String>,
    /// Output reference in effect (V).
    pub reference: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub labels: Vec<String>,
    pub observer_names: Vec<String>,
    pub records: Vec<Record>,
    /// Steps (not samples) on which the duty ratio was clipped.
    pub saturated_steps: usize,
    /// Wall-clock seconds spent in each observer.
    pub observer_seconds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("csv line {line}: {message}")]
pub struct CsvError {
    pub line: usize,
    pub message: String,
}

/// Shortest decimal form that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn hat_label(label: &str) -> String {
    let split = label.find(|c: char| c.is_ascii_digit()).unwrap_or(label.len());
    format!("{}hat{}", &label[..split], &label[split..])
}

fn opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

impl Trajectory {
    pub fn input_dim(&self) -> usize {
        self.records.first().map_or(1, |r| r.u.len())
    }

    fn channel_names(base: &str, m: usize) -> Vec<String> {
        if m == 1 {
            vec![base.to_string()]
        } else {
            (1..=m).map(|i| format!("{base}{i}")).collect()
        }
    }

    pub fn header(&self) -> Vec<String> {
        let m = self.input_dim();
        let mut h = vec!["t".to_string()];
        h.extend(self.labels.iter().cloned());
        h.extend(Self::channel_names("u", m));
        h.extend(Self::channel_names("ytilde", m));
        h.push("W".into());
        for name in &self.observer_names {
            h.extend(self.labels.iter().map(|l| format!("{name}.{}", hat_label(l))));
            for suffix in ["err_norm", "omega", "Delta"] {
                h.push(format!("{name}.{suffix}"));
            }
        }
        h.extend(["saturated", "event", "reference"].map(String::from));
        h
    }

    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.header().join(","))?;
        let mut line = String::new();
        for r in &self.records {
            line.clear();
            line.push_str(&format_float(r.t));
            for v in r.x.iter().chain(&r.u).chain(&r.ytilde) {
                let _ = write!(line, ",{}", format_float(*v));
            }
            let _ = write!(line, ",{}", opt(r.w));
            for o in &r.observers {
                for v in o.x_hat.iter() {
                    let _ = write!(line, ",{}", format_float(*v));
                }
                let _ = write!(line, ",{},{},{}", format_float(o.err_norm), opt(o.omega), opt(o.delta));
            }
            let _ = write!(
                line,
                ",{},{},{}",
                u8::from(r.saturated),
                r.event.as_deref().unwrap_or(""),
                format_float(r.reference)
            );
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Parses a file produced by [`Trajectory::write_csv`].
    pub fn from_csv(text: &str) -> Result<Self, CsvError> {
        let err = |line: usize, message: String| CsvError { line, message };
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().ok_or_else(|| err(1, "empty input".into()))?.split(',').collect();
        if header.first() != Some(&"t") {
            return Err(err(1, "first column must be `t`".into()));
        }
        let u_pos = header
            .iter()
            .position(|h| *h == "u" || *h == "u1")
            .ok_or_else(|| err(1, "missing input column".into()))?;
        let labels: Vec<String> = header[1..u_pos].iter().map(|s| s.to_string()).collect();
        let n = labels.len();
        let m = header.iter().filter(|h| h.starts_with("ytilde")).count();
        let mut observer_names: Vec<String> = Vec::new();
        for h in &header {
            if let Some((name, _)) = h.split_once('.') {
                if observer_names.last().map(String::as_str) != Some(name) {
                    observer_names.push(name.to_string());
                }
            }
        }
        let expected = 1 + n + 2 * m + 1 + observer_names.len() * (n + 3) + 3;
        if header.len() != expected {
            return Err(err(1, format!("expected {expected} columns, found {}", header.len())));
        }

        let mut traj = Trajectory {
            labels,
            observer_names: observer_names.clone(),
            observer_seconds: vec![0.0; observer_names.len()],
            ..Default::default()
        };
        for (k, line) in lines.enumerate() {
            let lineno = k + 2;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != expected {
                return Err(err(lineno, format!("expected {expected} fields, found {}", fields.len())));
            }
            let num = |i: usize| -> Result<f64, CsvError> {
                fields[i].parse::<f64>().map_err(|e| err(lineno, format!("column {}: {e}", header[i])))
            };
            let optnum = |i: usize| -> Result<Option<f64>, CsvError> {
                if fields[i].is_empty() {
                    Ok(None)
                } else {
                    num(i).map(Some)
                }
            };
            let mut c = 0;
            let t = num(c)?;
            c += 1;
            let x = Vector::from_iterator(n, (c..c + n).map(num).collect::<Result<Vec<_>, _>>()?);
            c += n;
            let u = (c..c + m).map(num).collect::<Result<Vec<_>, _>>()?;
            c += m;
            let ytilde = (c..c + m).map(num).collect::<Result<Vec<_>, _>>()?;
            c += m;
            let w = optnum(c)?;
            c += 1;
            let mut observers = Vec::with_capacity(observer_names.len());
            for _ in &observer_names {
                let x_hat = Vector::from_iterator(n, (c..c + n).map(num).collect::<Result<Vec<_>, _>>()?);
                c += n;
                observers.push(ObserverSample { x_hat, err_norm: num(c)?, omega: optnum(c + 1)?, delta: optnum(c + 2)? });
                c += 3;
            }
            let saturated = match fields[c] {
                "0" => false,
                "1" => true,
                other => return Err(err(lineno, format!("bad saturated flag `{other}`"))),
            };
            let event = (!fields[c + 1].is_empty()).then(|| fields[c + 1].to_string());
            let reference = num(c + 2)?;
            traj.records.push(Record { t, x, u, ytilde, w, observers, saturated, event, reference });
        }
        Ok(traj)
    }

    /// Index of an observer by name.
    pub fn observer_index(&self, name: &str) -> Option<usize> {
        self.observer_names.iter().position(|n| n == name)
    }
}
