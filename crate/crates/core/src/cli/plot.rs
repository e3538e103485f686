//! Minimal SVG line plots for convergence panels.

use std::fmt::Write;

use crate::solvers::Algorithm;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

pub fn algorithm_color(alg: Algorithm) -> &'static str {
    match alg {
        Algorithm::Fb => "#1f77b4",
        Algorithm::Fista => "#ff7f0e",
        Algorithm::AbcdCyclic => "#2ca02c",
        Algorithm::AbcdRandPerm => "#d62728",
        Algorithm::Vdm => "#9467bd",
        Algorithm::Mul => "#8c564b",
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub color: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn for_algorithm(alg: Algorithm, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: alg.as_str().to_owned(),
            color: algorithm_color(alg).to_owned(),
            points,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// y values are base-10 logarithms; ticks are labelled `1e{k}`.
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn range<'a>(values: impl Iterator<Item = &'a f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64, integer: bool) -> Vec<f64> {
    let mut step = nice_step(hi - lo, 5);
    if integer {
        step = step.max(1.0).round();
    }
    let first = (lo / step).ceil() * step;
    let mut out = Vec::new();
    let mut v = first;
    while v <= hi + 1e-9 * step && out.len() < 50 {
        out.push(v);
        v += step;
    }
    out
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        format!("1e{}", v.round() as i64)
    } else if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.3}")
    }
}

pub fn render_svg(panel: &Panel) -> String {
    let (x0, x1) = range(
        panel
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| &p.0)),
    );
    let (mut y0, mut y1) = range(
        panel
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|p| &p.1)),
    );
    if panel.log_y {
        y0 = y0.floor();
        y1 = y1.ceil().max(y0 + 1.0);
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&panel.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    for t in ticks(x0, x1, true) {
        let x = sx(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#ddd"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"##,
            TOP,
            TOP + ph,
            TOP + ph + 16.0,
            tick_label(t, false)
        );
    }
    for t in ticks(y0, y1, panel.log_y) {
        let y = sy(t);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0,
            tick_label(t, panel.log_y)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 10.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(&panel.y_label)
    );

    for series in &panel.series {
        let pts: Vec<String> = series
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y)))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                escape(&series.color),
                pts.join(" ")
            );
        }
    }

    let lx = LEFT + pw + 15.0;
    let _ = writeln!(s, r#"<g class="legend">"#);
    for (i, series) in panel.series.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="3"/><text x="{}" y="{}">{}</text>"#,
            lx + 24.0,
            escape(&series.color),
            lx + 30.0,
            y + 4.0,
            escape(&series.label)
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legend_and_lines() {
        let panel = Panel {
            title: "t".into(),
            x_label: "iteration".into(),
            y_label: "y".into(),
            log_y: true,
            series: vec![
                Series::for_algorithm(Algorithm::Fb, vec![(1.0, -1.0), (2.0, -3.5)]),
                Series::for_algorithm(Algorithm::Mul, vec![(1.0, f64::NEG_INFINITY)]),
            ],
        };
        let svg = render_svg(&panel);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains(">fb</text>") && svg.contains(">mul</text>"));
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains(">1e-4</text>"));
    }

    #[test]
    fn flat_series_gets_a_range() {
        assert_eq!(range([2.0, 2.0].iter()), (1.0, 3.0));
        assert_eq!(ticks(0.0, 10.0, true), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
    }
}
