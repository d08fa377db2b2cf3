//! Hand-written SVG output. Every coordinate is printed with a fixed number
//! of decimals so identical inputs give byte-identical documents.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{BoxplotStats, HistogramSpec, ScatterSpec};
use crate::data::Parameter;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Style {
    pub width: f64,
    pub height: f64,
    pub observed_color: String,
    pub generated_color: String,
    pub font_size: f64,
    /// Legend label for the generated series.
    pub generated_label: String,
}

impl Default for Style {
    fn default() -> Self {
        Self {
            width: 640.0,
            height: 420.0,
            observed_color: "#1f77b4".into(),
            generated_color: "#d62728".into(),
            font_size: 12.0,
            generated_label: "generated".into(),
        }
    }
}

pub enum Figure<'a> {
    Histogram(&'a HistogramSpec),
    Boxplot { parameter: Parameter, stats: &'a [BoxplotStats] },
    Scatter(&'a ScatterSpec),
}

const LEFT: f64 = 64.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 52.0;

fn axis_label(p: Parameter) -> &'static str {
    match p {
        Parameter::DipDirection => "dip direction (°)",
        Parameter::DipAngle => "dip angle (°)",
        Parameter::TraceLength => "trace length (m)",
    }
}

/// Short, stable tick label.
fn tick_text(v: f64) -> String {
    let v = if v.abs() < 1e-12 { 0.0 } else { v };
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// Round tick positions covering `[lo, hi]`.
fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    left: f64,
    top: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn new(style: &Style, (x0, x1): (f64, f64), (y0, y1): (f64, f64)) -> Self {
        let (x0, x1) = if x1 > x0 { (x0, x1) } else { (x0 - 0.5, x0 + 0.5) };
        let (y0, y1) = if y1 > y0 { (y0, y1) } else { (y0 - 0.5, y0 + 0.5) };
        Self {
            x0,
            x1,
            y0,
            y1,
            left: LEFT,
            top: TOP,
            w: style.width - LEFT - RIGHT,
            h: style.height - TOP - BOTTOM,
        }
    }

    fn x(&self, v: f64) -> f64 {
        self.left + (v - self.x0) / (self.x1 - self.x0) * self.w
    }

    fn y(&self, v: f64) -> f64 {
        self.top + self.h - (v - self.y0) / (self.y1 - self.y0) * self.h
    }
}

struct Doc {
    out: String,
    style: Style,
}

impl Doc {
    fn new(style: &Style, title: &str) -> Self {
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}" font-family="sans-serif" font-size="{fs:.0}">"#,
            w = style.width,
            h = style.height,
            fs = style.font_size
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="{:.0}">{}</text>"#,
            style.width / 2.0,
            style.font_size + 2.0,
            escape(title)
        );
        Self { out, style: style.clone() }
    }

    fn axes(&mut self, f: &Frame, x_label: &str, y_label: &str, x_ticks: &[f64], y_ticks: &[f64]) {
        let (bx, by) = (f.top + f.h, f.left);
        let _ = writeln!(
            self.out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            f.left, f.top, f.w, f.h
        );
        for &t in x_ticks {
            let x = f.x(t);
            let _ = writeln!(
                self.out,
                r#"<line x1="{x:.2}" y1="{bx:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                bx + 5.0,
                bx + 18.0,
                tick_text(t)
            );
        }
        for &t in y_ticks {
            let y = f.y(t);
            let _ = writeln!(
                self.out,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{by:.2}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                by - 5.0,
                by - 8.0,
                y + 4.0,
                tick_text(t)
            );
        }
        let _ = writeln!(
            self.out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            f.left + f.w / 2.0,
            self.style.height - 12.0,
            escape(x_label)
        );
        let _ = writeln!(
            self.out,
            r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
            f.top + f.h / 2.0,
            f.top + f.h / 2.0,
            escape(y_label)
        );
    }

    fn legend(&mut self, f: &Frame, entries: &[(&str, &str)]) {
        for (i, (label, color)) in entries.iter().enumerate() {
            let y = f.top + 14.0 + 18.0 * i as f64;
            let x = f.left + f.w - 120.0;
            let _ = writeln!(
                self.out,
                r#"<rect x="{x:.2}" y="{:.2}" width="12" height="12" fill="{color}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                y - 10.0,
                x + 18.0,
                y,
                escape(label)
            );
        }
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn polyline(out: &mut String, f: &Frame, xs: &[f64], ys: &[f64], color: &str) {
    let pts: Vec<String> = xs.iter().zip(ys).map(|(x, y)| format!("{:.2},{:.2}", f.x(*x), f.y(*y))).collect();
    let _ = writeln!(
        out,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
        pts.join(" ")
    );
}

fn histogram(spec: &HistogramSpec, style: &Style) -> String {
    let density = |counts: &[usize]| -> Vec<f64> {
        let n: usize = counts.iter().sum();
        counts
            .iter()
            .enumerate()
            .map(|(k, &c)| c as f64 / (n as f64 * (spec.edges[k + 1] - spec.edges[k])))
            .collect()
    };
    let obs_d = density(&spec.observed_counts);
    let gen_d = spec.generated_counts.as_deref().map(density);
    let y_max = obs_d
        .iter()
        .chain(gen_d.iter().flatten())
        .chain(&spec.kde_observed)
        .chain(spec.kde_generated.iter().flatten())
        .fold(0.0f64, |m, v| m.max(*v))
        * 1.08;
    let x_lo = spec.kde_x[0].min(spec.edges[0]);
    let x_hi = spec.kde_x[spec.kde_x.len() - 1].max(spec.edges[spec.edges.len() - 1]);
    let f = Frame::new(style, (x_lo, x_hi), (0.0, y_max));
    let mut doc = Doc::new(style, &format!("{} distribution", spec.parameter.name().replace('_', " ")));
    let series: Vec<(&[f64], &str)> = std::iter::once((obs_d.as_slice(), style.observed_color.as_str()))
        .chain(gen_d.as_deref().map(|d| (d, style.generated_color.as_str())))
        .collect();
    for (d, color) in &series {
        for (k, v) in d.iter().enumerate() {
            let (xa, xb) = (f.x(spec.edges[k]), f.x(spec.edges[k + 1]));
            let (ya, yb) = (f.y(*v), f.y(0.0));
            let _ = writeln!(
                doc.out,
                r#"<rect x="{xa:.2}" y="{ya:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.3" stroke="{color}" stroke-width="0.5"/>"#,
                xb - xa,
                yb - ya
            );
        }
    }
    polyline(&mut doc.out, &f, &spec.kde_x, &spec.kde_observed, &style.observed_color);
    if let Some(k) = &spec.kde_generated {
        polyline(&mut doc.out, &f, &spec.kde_x, k, &style.generated_color);
    }
    doc.axes(&f, axis_label(spec.parameter), "density", &nice_ticks(f.x0, f.x1, 6), &nice_ticks(0.0, y_max, 5));
    let mut legend = vec![("observed", style.observed_color.as_str())];
    if spec.generated_counts.is_some() {
        legend.push((style.generated_label.as_str(), style.generated_color.as_str()));
    }
    doc.legend(&f, &legend);
    doc.finish()
}

fn boxplot(parameter: Parameter, stats: &[BoxplotStats], style: &Style) -> String {
    let values = stats
        .iter()
        .flat_map(|s| [s.whisker_low, s.whisker_high].into_iter().chain(s.outliers.iter().copied()));
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let pad = ((hi - lo) * 0.05).max(1e-9);
    let (lo, hi) = if stats.is_empty() { (0.0, 1.0) } else { (lo - pad, hi + pad) };
    let k = stats.len().max(1) as f64;
    let f = Frame::new(style, (0.0, k), (lo, hi));
    let mut doc = Doc::new(style, &format!("{} boxplot", parameter.name().replace('_', " ")));
    let colors = [style.observed_color.as_str(), style.generated_color.as_str()];
    for (i, s) in stats.iter().enumerate() {
        let color = colors[i.min(1)];
        let cx = f.x(i as f64 + 0.5);
        let half = f.w / k * 0.2;
        let _ = writeln!(
            doc.out,
            r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/><line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#,
            f.y(s.whisker_low),
            f.y(s.q1),
            f.y(s.q3),
            f.y(s.whisker_high)
        );
        for w in [s.whisker_low, s.whisker_high] {
            let _ = writeln!(
                doc.out,
                r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#,
                cx - half / 2.0,
                cx + half / 2.0,
                y = f.y(w)
            );
        }
        let _ = writeln!(
            doc.out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.35" stroke="black"/>"#,
            cx - half,
            f.y(s.q3),
            2.0 * half,
            f.y(s.q1) - f.y(s.q3)
        );
        let _ = writeln!(
            doc.out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black" stroke-width="2"/>"#,
            cx - half,
            cx + half,
            y = f.y(s.median)
        );
        for o in &s.outliers {
            let _ = writeln!(
                doc.out,
                r#"<circle cx="{cx:.2}" cy="{:.2}" r="2.5" fill="none" stroke="{color}"/>"#,
                f.y(*o)
            );
        }
        let _ = writeln!(
            doc.out,
            r#"<text x="{cx:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            f.top + f.h + 18.0,
            escape(&s.label)
        );
    }
    doc.axes(&f, "", axis_label(parameter), &[], &nice_ticks(lo, hi, 6));
    doc.finish()
}

fn scatter(spec: &ScatterSpec, style: &Style) -> String {
    let f = Frame::new(style, (0.0, 360.0), (0.0, 90.0));
    let mut doc = Doc::new(style, "dip direction vs dip angle");
    let mut series = vec![(&spec.observed, style.observed_color.as_str())];
    if let Some(g) = &spec.generated {
        series.push((g, style.generated_color.as_str()));
    }
    for (points, color) in &series {
        for p in points.iter() {
            let _ = writeln!(
                doc.out,
                r#"<circle cx="{:.2}" cy="{:.2}" r="1.8" fill="{color}" fill-opacity="0.5"/>"#,
                f.x(p[0]),
                f.y(p[1])
            );
        }
    }
    doc.axes(
        &f,
        axis_label(Parameter::DipDirection),
        axis_label(Parameter::DipAngle),
        &(0..=8).map(|k| 45.0 * k as f64).collect::<Vec<_>>(),
        &(0..=6).map(|k| 15.0 * k as f64).collect::<Vec<_>>(),
    );
    let r_text = |r: Option<f64>| r.map(|v| format!("{v:.2}")).unwrap_or_else(|| "n/a".into());
    let legend_obs = format!("observed (r = {})", r_text(spec.r_observed));
    let legend_gen = spec
        .generated
        .as_ref()
        .map(|_| format!("{} (r = {})", style.generated_label, r_text(spec.r_generated)));
    let mut entries = vec![(legend_obs.as_str(), style.observed_color.as_str())];
    if let Some(g) = &legend_gen {
        entries.push((g.as_str(), style.generated_color.as_str()));
    }
    let legend_frame = Frame { left: f.left - 60.0, ..f };
    doc.legend(&legend_frame, &entries);
    doc.finish()
}

/// Render a figure as a standalone SVG document.
pub fn render_svg(figure: &Figure<'_>, style: &Style) -> String {
    match figure {
        Figure::Histogram(spec) => histogram(spec, style),
        Figure::Boxplot { parameter, stats } => boxplot(*parameter, stats, style),
        Figure::Scatter(spec) => scatter(spec, style),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        assert_eq!(nice_ticks(0.0, 360.0, 8), (0..=7).map(|k| 50.0 * k as f64).collect::<Vec<_>>());
        let labels: Vec<String> = nice_ticks(0.0, 1.0, 5).into_iter().map(tick_text).collect();
        assert_eq!(labels, ["0", "0.2", "0.4", "0.6", "0.8", "1"]);
        assert_eq!(tick_text(-0.0), "0");
        assert_eq!(tick_text(250.0), "250");
    }

    #[test]
    fn escaping() {
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }
}
