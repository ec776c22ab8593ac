//! Hand-written SVG line charts. Output depends only on the data, so equal
//! inputs give byte-identical files.

use std::fmt::Write;

const PANEL_W: f64 = 640.0;
const PANEL_H: f64 = 220.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 40.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// One named polyline.
#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, xs: &[f64], ys: &[f64]) -> Self {
        Self { name: name.into(), points: xs.iter().copied().zip(ys.iter().copied()).collect() }
    }
}

/// One chart with shared axes.
#[derive(Debug, Clone)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl Panel {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>) -> Self {
        Self { title: title.into(), x_label: x_label.into(), log_x: false, log_y: false, series: Vec::new() }
    }

    pub fn log_log(mut self) -> Self {
        self.log_x = true;
        self.log_y = true;
        self
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn transform(v: f64, log: bool) -> Option<f64> {
    match (log, v.is_finite()) {
        (_, false) => None,
        (true, _) if v <= 0.0 => None,
        (true, _) => Some(v.log10()),
        (false, _) => Some(v),
    }
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return None;
    }
    if hi - lo <= 1e-300_f64.max(1e-12 * lo.abs()) {
        return Some((lo - 0.5, hi + 0.5));
    }
    Some((lo, hi))
}

fn label(v: f64, log: bool) -> String {
    let v = if log { 10f64.powf(v) } else { v };
    format!("{v:.3e}")
}

fn render_panel(out: &mut String, panel: &Panel, top: f64) {
    let pts: Vec<Vec<(f64, f64)>> = panel
        .series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .filter_map(|&(x, y)| Some((transform(x, panel.log_x)?, transform(y, panel.log_y)?)))
                .collect()
        })
        .collect();
    let (x0, y0) = (MARGIN_L, top + MARGIN_T);
    let (w, h) = (PANEL_W - MARGIN_L - MARGIN_R, PANEL_H - MARGIN_T - MARGIN_B);
    let _ = writeln!(out, r#"<text x="{}" y="{:.1}" font-size="14">{}</text>"#, MARGIN_L, top + 18.0, escape(&panel.title));
    let _ = writeln!(out, r##"<rect x="{x0}" y="{y0:.1}" width="{w}" height="{h}" fill="none" stroke="#444"/>"##);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
        x0 + 0.5 * w,
        y0 + h + 32.0,
        escape(&panel.x_label)
    );
    let xr = range(pts.iter().flatten().map(|p| p.0));
    let yr = range(pts.iter().flatten().map(|p| p.1));
    let (Some((xa, xb)), Some((ya, yb))) = (xr, yr) else {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">no plottable data</text>"#,
            x0 + 0.5 * w,
            y0 + 0.5 * h
        );
        return;
    };
    let sx = |x: f64| x0 + (x - xa) / (xb - xa) * w;
    let sy = |y: f64| y0 + h - (y - ya) / (yb - ya) * h;
    for (v, anchor, x) in [(xa, "start", x0), (xb, "end", x0 + w)] {
        let _ = writeln!(
            out,
            r#"<text x="{x:.1}" y="{:.1}" font-size="10" text-anchor="{anchor}">{}</text>"#,
            y0 + h + 14.0,
            label(v, panel.log_x)
        );
    }
    for (v, y) in [(ya, y0 + h), (yb, y0 + 8.0)] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{y:.1}" font-size="10" text-anchor="end">{}</text>"#,
            x0 - 4.0,
            label(v, panel.log_y)
        );
    }
    for (i, (series, p)) in panel.series.iter().zip(&pts).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !p.is_empty() {
            let coords: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                coords.join(" ")
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" fill="{color}" text-anchor="end">{}</text>"#,
            x0 + w - 4.0,
            y0 + 12.0 + 12.0 * i as f64,
            escape(&series.name)
        );
    }
}

/// Stacks the panels vertically into one document.
pub fn render(title: &str, panels: &[Panel]) -> String {
    let height = 30.0 + PANEL_H * panels.len() as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PANEL_W}" height="{height}" viewBox="0 0 {PANEL_W} {height}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="10" y="20" font-size="16">{}</text>"#, escape(title));
    for (i, panel) in panels.iter().enumerate() {
        render_panel(&mut out, panel, 30.0 + PANEL_H * i as f64);
    }
    out.push_str("</svg>\n");
    out
}
