//! Minimal deterministic SVG line charts.

use std::fmt::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Marker {
    None,
    Circle,
    Square,
    Star,
}

#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub color: &'static str,
    pub dashed: bool,
    pub line: bool,
    pub marker: Marker,
    /// `(x, y, error half-width)`.
    pub points: Vec<(f64, f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, color: &'static str) -> Self {
        Series {
            name: name.into(),
            color,
            dashed: false,
            line: true,
            marker: Marker::Circle,
            points: Vec::new(),
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }

    pub fn marker(mut self, m: Marker) -> Self {
        self.marker = m;
        self
    }

    pub fn no_line(mut self) -> Self {
        self.line = false;
        self
    }
}

#[derive(Clone, Debug)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Fixed y range; fitted to the data when `None`.
    pub y_range: Option<(f64, f64)>,
}

const W: f64 = 340.0;
const H: f64 = 280.0;
const ML: f64 = 52.0;
const MR: f64 = 12.0;
const MT: f64 = 28.0;
const MB: f64 = 42.0;

fn num(x: f64) -> String {
    let s = format!("{x:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn extent(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.filter(|v| v.is_finite()).fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step - 1e-9).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn render_panel(out: &mut String, p: &Panel, ox: f64, oy: f64, legend: bool) {
    let xs = extent(p.series.iter().flat_map(|s| s.points.iter().map(|q| q.0)));
    let ys = extent(
        p.series
            .iter()
            .flat_map(|s| s.points.iter().flat_map(|q| [q.1 - q.2, q.1 + q.2])),
    );
    let (x0, x1) = match xs {
        Some((a, b)) if b > a => (a - 0.05 * (b - a), b + 0.05 * (b - a)),
        Some((a, _)) => (a - 1.0, a + 1.0),
        None => (0.0, 1.0),
    };
    let (y0, y1) = p.y_range.unwrap_or(match ys {
        Some((a, b)) if b > a => (a - 0.08 * (b - a), b + 0.08 * (b - a)),
        Some((a, _)) => (a - 0.5, a + 0.5),
        None => (0.0, 1.0),
    });
    let pw = W - ML - MR;
    let ph = H - MT - MB;
    let sx = |x: f64| ox + ML + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| oy + MT + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let _ = writeln!(
        out,
        r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
        num(ox + ML),
        num(oy + MT),
        num(pw),
        num(ph)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
        num(ox + ML + pw / 2.0),
        num(oy + 18.0),
        escape(&p.title)
    );
    for t in ticks(x0, x1) {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="10">{}</text>"#,
            num(sx(t)),
            num(oy + MT + ph + 14.0),
            num(t)
        );
    }
    for t in ticks(y0, y1) {
        let _ = writeln!(
            out,
            r##"<line x1="{a}" x2="{b}" y1="{y}" y2="{y}" stroke="#ddd"/><text x="{c}" y="{d}" text-anchor="end" font-size="10">{t}</text>"##,
            a = num(ox + ML),
            b = num(ox + ML + pw),
            y = num(sy(t)),
            c = num(ox + ML - 4.0),
            d = num(sy(t) + 3.0),
            t = num(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="11">{}</text>"#,
        num(ox + ML + pw / 2.0),
        num(oy + H - 8.0),
        escape(&p.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text transform="translate({},{}) rotate(-90)" text-anchor="middle" font-size="11">{}</text>"#,
        num(ox + 13.0),
        num(oy + MT + ph / 2.0),
        escape(&p.y_label)
    );

    for s in &p.series {
        let dash = if s.dashed { r#" stroke-dasharray="5,4""# } else { "" };
        if s.line && s.points.len() > 1 {
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|q| format!("{},{}", num(sx(q.0)), num(sy(q.1.clamp(y0, y1)))))
                .collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"{dash}/>"#,
                pts.join(" "),
                s.color
            );
        }
        for &(x, y, e) in &s.points {
            let (cx, cy) = (sx(x), sy(y.clamp(y0, y1)));
            if e > 0.0 {
                let _ = writeln!(
                    out,
                    r#"<line x1="{x}" x2="{x}" y1="{a}" y2="{b}" stroke="{c}"/>"#,
                    x = num(cx),
                    a = num(sy((y - e).max(y0))),
                    b = num(sy((y + e).min(y1))),
                    c = s.color
                );
            }
            marker(out, s.marker, cx, cy, s.color);
        }
    }

    if legend {
        for (i, s) in p.series.iter().enumerate() {
            let ly = oy + MT + 12.0 + 14.0 * i as f64;
            let lx = ox + ML + pw - 110.0;
            let dash = if s.dashed { r#" stroke-dasharray="5,4""# } else { "" };
            let _ = writeln!(
                out,
                r#"<line x1="{}" x2="{}" y1="{y}" y2="{y}" stroke="{}"{dash}/>"#,
                num(lx),
                num(lx + 16.0),
                s.color,
                y = num(ly)
            );
            marker(out, s.marker, lx + 8.0, ly, s.color);
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" font-size="10">{}</text>"#,
                num(lx + 20.0),
                num(ly + 3.0),
                escape(&s.name)
            );
        }
    }
}

fn marker(out: &mut String, m: Marker, x: f64, y: f64, color: &str) {
    match m {
        Marker::None => {}
        Marker::Circle => {
            let _ = writeln!(out, r#"<circle cx="{}" cy="{}" r="3.5" fill="{color}"/>"#, num(x), num(y));
        }
        Marker::Square => {
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="7" height="7" fill="{color}"/>"#,
                num(x - 3.5),
                num(y - 3.5)
            );
        }
        Marker::Star => {
            let pts: Vec<String> = (0..10)
                .map(|i| {
                    let r = if i % 2 == 0 { 7.0 } else { 3.0 };
                    let a = std::f64::consts::PI * (i as f64 / 5.0 - 0.5);
                    format!("{},{}", num(x + r * a.cos()), num(y + r * a.sin()))
                })
                .collect();
            let _ = writeln!(out, r#"<polygon points="{}" fill="{color}"/>"#, pts.join(" "));
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Panels side by side, `cols` per row; the legend goes in the first panel.
pub fn render(panels: &[Panel], cols: usize) -> String {
    let cols = cols.max(1).min(panels.len().max(1));
    let rows = panels.len().div_ceil(cols).max(1);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif">"#,
        num(W * cols as f64),
        num(H * rows as f64)
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (i, p) in panels.iter().enumerate() {
        let ox = W * (i % cols) as f64;
        let oy = H * (i / cols) as f64;
        render_panel(&mut out, p, ox, oy, i == 0);
    }
    out.push_str("</svg>\n");
    out
}
