//! Standalone SVG line charts.

use std::fmt::Write;

use ldmpc::simulate::SimulationLog;

const W: f64 = 720.0;
const H: f64 = 360.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 44.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Drawn as a step function (piecewise constant between samples).
    pub steps: bool,
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Dashed horizontal guides, e.g. constraint bounds.
    pub guides: Vec<(String, f64)>,
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Chart {
    pub fn to_svg(&self) -> String {
        let pts = self.series.iter().flat_map(|s| s.points.iter());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        for &(_, g) in &self.guides {
            y0 = y0.min(g);
            y1 = y1.max(g);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 < 1e-12 {
            x1 = x0 + 1.0;
        }
        let pad = ((y1 - y0) * 0.05).max(1e-9 + 0.05 * y1.abs().max(y0.abs()));
        (y0, y1) = (y0 - pad, y1 + pad);
        let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
        let sy = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(&self.title));
        for t in nice_ticks(x0, x1) {
            let x = sx(t);
            let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#eee"/>"##, H - BOTTOM);
            let _ = writeln!(svg, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{t}</text>"#, H - BOTTOM + 16.0);
        }
        for t in nice_ticks(y0, y1) {
            let y = sy(t);
            let _ = writeln!(svg, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#eee"/>"##, W - RIGHT);
            let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, y + 4.0, format!("{t:.3}").trim_end_matches('0').trim_end_matches('.'));
        }
        let _ = writeln!(
            svg,
            r#"<rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            W - LEFT - RIGHT,
            H - TOP - BOTTOM
        );
        let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, (LEFT + W - RIGHT) / 2.0, H - 8.0, escape(&self.x_label));
        let _ = writeln!(
            svg,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            (TOP + H - BOTTOM) / 2.0,
            (TOP + H - BOTTOM) / 2.0,
            escape(&self.y_label)
        );
        for (label, g) in &self.guides {
            let y = sy(*g);
            let _ = writeln!(
                svg,
                r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#555" stroke-dasharray="6 4"><title>{}</title></line>"##,
                W - RIGHT,
                escape(label)
            );
        }
        for (i, s) in self.series.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let mut d = String::new();
            for (j, &(x, y)) in s.points.iter().enumerate() {
                if j == 0 {
                    let _ = write!(d, "M{:.2},{:.2}", sx(x), sy(y));
                } else if s.steps {
                    let _ = write!(d, " H{:.2} V{:.2}", sx(x), sy(y));
                } else {
                    let _ = write!(d, " L{:.2},{:.2}", sx(x), sy(y));
                }
            }
            let _ = writeln!(svg, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
            let ly = TOP + 14.0 + 16.0 * i as f64;
            let lx = W - RIGHT - 150.0;
            let _ = writeln!(svg, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
            let _ = writeln!(svg, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&s.label));
        }
        svg.push_str("</svg>\n");
        svg
    }
}

/// `z` and the governed reference against time, with the target schedule.
pub fn outputs(log: &SimulationLog<f64>) -> Chart {
    let n_z = log.steps.first().map_or(0, |s| s.z.len());
    let mut series = Vec::new();
    for i in 0..n_z {
        series.push(Series { label: format!("z{i}"), points: log.steps.iter().map(|s| (s.t, s.z[i])).collect(), steps: false });
        series.push(Series { label: format!("v{i}"), points: log.steps.iter().map(|s| (s.t, s.v[i])).collect(), steps: true });
        series.push(Series {
            label: format!("r{i}"),
            points: log.steps.iter().zip(&log.targets).map(|(s, r)| (s.t, r[i])).collect(),
            steps: true,
        });
    }
    Chart {
        title: format!("tracked output ({})", log.mode.as_str()),
        x_label: "t [s]".into(),
        y_label: "z".into(),
        series,
        guides: Vec::new(),
    }
}

/// Inputs against time; `bounds` are `(label, value)` guides.
pub fn inputs(log: &SimulationLog<f64>, bounds: Vec<(String, f64)>) -> Chart {
    let n_u = log.steps.first().map_or(0, |s| s.u.len());
    Chart {
        title: format!("input ({})", log.mode.as_str()),
        x_label: "t [s]".into(),
        y_label: "u".into(),
        series: (0..n_u)
            .map(|i| Series { label: format!("u{i}"), points: log.steps.iter().map(|s| (s.t, s.u[i])).collect(), steps: true })
            .collect(),
        guides: bounds,
    }
}

pub fn iterations(log: &SimulationLog<f64>) -> Chart {
    Chart {
        title: format!("longstep iterations per step ({})", log.mode.as_str()),
        x_label: "t [s]".into(),
        y_label: "iterations".into(),
        series: vec![Series {
            label: "iterations".into(),
            points: log.steps.iter().map(|s| (s.t, s.iterations as f64)).collect(),
            steps: true,
        }],
        guides: Vec::new(),
    }
}
