//! Minimal SVG scatter plots for exported reports.

use std::fmt::Write;

#[derive(Clone, Debug)]
pub struct Series {
    pub name: String,
    pub color: &'static str,
    pub points: Vec<(f64, f64)>,
    /// Connect the points in order instead of drawing markers only.
    pub line: bool,
}

#[derive(Clone, Debug)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const W: f64 = 360.0;
const H: f64 = 280.0;
const PAD: f64 = 48.0;

fn axis_range(values: impl Iterator<Item = f64>, log: bool) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        let v = if log { v.max(f64::MIN_POSITIVE).log10() } else { v };
        if v.is_finite() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

fn tick(v: f64, log: bool) -> String {
    if log {
        format!("1e{v:.1}")
    } else if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn render_panel(out: &mut String, p: &Panel, ox: f64, oy: f64) {
    let xs = p.series.iter().flat_map(|s| s.points.iter().map(|q| q.0));
    let ys = p.series.iter().flat_map(|s| s.points.iter().map(|q| q.1));
    let (x0, x1) = axis_range(xs, p.log_x);
    let (y0, y1) = axis_range(ys, p.log_y);
    let px = |x: f64| {
        let x = if p.log_x { x.max(f64::MIN_POSITIVE).log10() } else { x };
        ox + PAD + (x - x0) / (x1 - x0) * (W - 1.5 * PAD)
    };
    let py = |y: f64| {
        let y = if p.log_y { y.max(f64::MIN_POSITIVE).log10() } else { y };
        oy + H - PAD - (y - y0) / (y1 - y0) * (H - 1.5 * PAD)
    };
    let (left, right, top, bottom) = (ox + PAD, ox + W - PAD / 2.0, oy + PAD / 2.0, oy + H - PAD);
    let _ = writeln!(
        out,
        r##"<rect x="{left:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#444"/>"##,
        right - left,
        bottom - top
    );
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#, ox + W / 2.0, oy + 16.0, esc(&p.title));
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{}</text>"#, ox + W / 2.0, oy + H - 10.0, esc(&p.x_label));
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        ox + 12.0,
        oy + H / 2.0,
        ox + 12.0,
        oy + H / 2.0,
        esc(&p.y_label)
    );
    let _ = writeln!(out, r#"<text x="{left:.1}" y="{:.1}" font-size="9">{}</text>"#, bottom + 12.0, tick(x0, p.log_x));
    let _ = writeln!(out, r#"<text x="{right:.1}" y="{:.1}" font-size="9" text-anchor="end">{}</text>"#, bottom + 12.0, tick(x1, p.log_x));
    let _ = writeln!(out, r#"<text x="{:.1}" y="{bottom:.1}" font-size="9" text-anchor="end">{}</text>"#, left - 2.0, tick(y0, p.log_y));
    let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" font-size="9" text-anchor="end">{}</text>"#, left - 2.0, top + 8.0, tick(y1, p.log_y));
    for (i, s) in p.series.iter().enumerate() {
        if s.line {
            let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
            let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"#, pts.join(" "), s.color);
        }
        for &(x, y) in &s.points {
            let _ = writeln!(out, r#"<circle cx="{:.1}" cy="{:.1}" r="2" fill="{}" fill-opacity="0.7"/>"#, px(x), py(y), s.color);
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="9" fill="{}">{}</text>"#,
            left + 4.0,
            top + 12.0 + 11.0 * i as f64,
            s.color,
            esc(&s.name)
        );
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Lays panels out on a grid with `cols` columns.
pub fn render(panels: &[Panel], cols: usize) -> String {
    let cols = cols.max(1);
    let rows = panels.len().div_ceil(cols).max(1);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif">"#,
        W * cols as f64,
        H * rows as f64
    );
    for (i, p) in panels.iter().enumerate() {
        render_panel(&mut out, p, W * (i % cols) as f64, H * (i / cols) as f64);
    }
    out.push_str("</svg>\n");
    out
}
