//! Minimal SVG line charts: stacked panels sharing the time axis.

use std::fmt::Write as _;

const WIDTH: f64 = 760.0;
const PANEL_HEIGHT: f64 = 210.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 28.0;
const BOTTOM: f64 = 34.0;
const MAX_POINTS: usize = 1500;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub y_label: String,
    /// Plot `log10(y)`; non-positive values are dropped.
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl Panel {
    pub fn new(title: impl Into<String>, y_label: impl Into<String>, log_y: bool) -> Self {
        Self { title: title.into(), y_label: y_label.into(), log_y, series: Vec::new() }
    }

    fn transformed(&self) -> Vec<(String, Vec<(f64, f64)>)> {
        self.series
            .iter()
            .map(|s| {
                let pts = s
                    .points
                    .iter()
                    .filter(|(_, y)| y.is_finite() && (!self.log_y || *y > 0.0))
                    .map(|&(t, y)| (t, if self.log_y { y.log10() } else { y }))
                    .collect::<Vec<_>>();
                (s.label.clone(), thin(pts))
            })
            .collect()
    }
}

/// Keeps at most `MAX_POINTS` evenly spaced points, always including the last.
fn thin(points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    if points.len() <= MAX_POINTS {
        return points;
    }
    let step = points.len().div_ceil(MAX_POINTS);
    let last = *points.last().unwrap();
    let mut out: Vec<_> = points.into_iter().step_by(step).collect();
    if out.last() != Some(&last) {
        out.push(last);
    }
    out
}

/// Roughly five round tick values covering `[lo, hi]`.
pub fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    if !(hi > lo) {
        return vec![lo];
    }
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() * step;
    (0..)
        .map(|i| first + i as f64 * step)
        .take_while(|v| *v <= hi + 1e-9 * step)
        .map(|v| if v.abs() < 1e-12 * step { 0.0 } else { v })
        .collect()
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        format!("1e{}", v.round() as i64)
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".into() } else { s.to_string() }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn bounds(data: &[(String, Vec<(f64, f64)>)]) -> Option<(f64, f64, f64, f64)> {
    let pts = data.iter().flat_map(|(_, p)| p.iter());
    let (mut t0, mut t1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(t, y) in pts {
        t0 = t0.min(t);
        t1 = t1.max(t);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !t0.is_finite() {
        return None;
    }
    if t1 <= t0 {
        t1 = t0 + 1.0;
    }
    if y1 - y0 < 1e-12 * y0.abs().max(1.0) {
        y0 -= 0.5 * y0.abs().max(1.0);
        y1 += 0.5 * y1.abs().max(1.0);
    }
    let pad = 0.05 * (y1 - y0);
    Some((t0, t1, y0 - pad, y1 + pad))
}

fn render_panel(svg: &mut String, panel: &Panel, top: f64) {
    let data = panel.transformed();
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (py0, py1) = (top + TOP, top + PANEL_HEIGHT - BOTTOM);
    let _ = writeln!(svg, r#"<text x="{LEFT}" y="{}" font-size="13" font-weight="bold">{}</text>"#, top + 18.0, escape(&panel.title));
    let _ = writeln!(svg, r##"<rect x="{x0}" y="{py0}" width="{}" height="{}" fill="none" stroke="#444"/>"##, x1 - x0, py1 - py0);
    let Some((t0, t1, y0, y1)) = bounds(&data) else {
        let _ = writeln!(svg, r##"<text x="{}" y="{}" font-size="12" fill="#888">no data</text>"##, x0 + 10.0, py0 + 20.0);
        return;
    };
    let sx = |t: f64| x0 + (t - t0) / (t1 - t0) * (x1 - x0);
    let sy = |y: f64| py1 - (y - y0) / (y1 - y0) * (py1 - py0);

    for v in ticks(y0, y1) {
        let y = sy(v);
        let _ = writeln!(svg, r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#e5e5e5"/>"##);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#,
            x0 - 4.0,
            y + 3.0,
            tick_label(v, panel.log_y)
        );
    }
    for v in ticks(t0, t1) {
        let x = sx(v);
        let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{py1}" x2="{x:.2}" y2="{}" stroke="#444"/>"##, py1 + 4.0);
        let _ = writeln!(svg, r#"<text x="{x:.2}" y="{}" font-size="10" text-anchor="middle">{}</text>"#, py1 + 15.0, tick_label(v, false));
    }
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{:.2}" font-size="11" transform="rotate(-90 14 {:.2})" text-anchor="middle">{}</text>"#,
        (py0 + py1) / 2.0,
        (py0 + py1) / 2.0,
        escape(&panel.y_label)
    );

    for (i, (label, pts)) in data.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if !pts.is_empty() {
            let mut path = String::new();
            for (k, &(t, y)) in pts.iter().enumerate() {
                let _ = write!(path, "{}{:.2},{:.2}", if k == 0 { "M" } else { " L" }, sx(t), sy(y));
            }
            let _ = writeln!(svg, r#"<path d="{path}" fill="none" stroke="{color}" stroke-width="1.3"/>"#);
        }
        let ly = py0 + 12.0 + 15.0 * i as f64;
        let _ = writeln!(svg, r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, x1 + 10.0, x1 + 28.0);
        let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="10">{}</text>"#, x1 + 32.0, ly + 3.5, escape(label));
    }
}

/// Renders the panels top to bottom; the x axis is time in seconds.
pub fn render(title: &str, panels: &[Panel]) -> String {
    let height = 30.0 + PANEL_HEIGHT * panels.len() as f64 + 20.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="20" font-size="15" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    for (i, p) in panels.iter().enumerate() {
        render_panel(&mut svg, p, 30.0 + PANEL_HEIGHT * i as f64);
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" font-size="11" text-anchor="middle">t (s)</text>"#, (LEFT + WIDTH - RIGHT) / 2.0, height - 6.0);
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round_and_cover_range() {
        let t = ticks(0.0, 0.05);
        assert_eq!(t.len(), 6);
        assert!(t.iter().enumerate().all(|(i, v)| (v - 0.01 * i as f64).abs() < 1e-15));
        let t = ticks(-18.3, -4.7);
        assert!(t.iter().all(|v| (-18.3..=-4.7).contains(v)));
        assert_eq!(t, vec![-15.0, -10.0, -5.0]);
        assert_eq!(ticks(1.0, 1.0), vec![1.0]);
    }

    #[test]
    fn thinning_keeps_endpoints() {
        let pts: Vec<_> = (0..10_001).map(|i| (i as f64, 0.0)).collect();
        let out = thin(pts);
        assert!(out.len() <= MAX_POINTS + 1);
        assert_eq!(out.first().unwrap().0, 0.0);
        assert_eq!(out.last().unwrap().0, 10_000.0);
    }

    #[test]
    fn renders_valid_looking_svg() {
        let mut p = Panel::new("v4", "V", false);
        p.series.push(Series { label: "a<b".into(), points: vec![(0.0, -18.0), (0.05, -15.0)] });
        let mut e = Panel::new("errors", "log10", true);
        e.series.push(Series { label: "zero".into(), points: vec![(0.0, 0.0)] });
        let svg = render("demo", &[p, e]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a&lt;b"));
        assert!(svg.contains("no data"));
        assert_eq!(svg.matches("<path").count(), 1);
    }
}
