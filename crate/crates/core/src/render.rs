//! Deterministic SVG rendering of bifurcation diagrams and solution profiles.
//!
//! Output depends only on the input data: coordinates are printed with fixed precision,
//! series keep their given order and colours cycle through a fixed palette.

use crate::bowtie::{DstBranchPoint, DstEvent, DstEventKind};
use crate::continuation::{Branch, EventTag};
use crate::graph::GraphFunction;
use crate::{Error, Result};
use std::fmt::Write;

const PALETTE: [&str; 10] =
    ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkerKind {
    Fold,
    BranchPoint,
    Pitchfork,
    Transcritical,
    SaddleNode,
    SymmetryBreaking,
}

impl MarkerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MarkerKind::Fold => "fold",
            MarkerKind::BranchPoint => "branch-point",
            MarkerKind::Pitchfork => "pitchfork",
            MarkerKind::Transcritical => "transcritical",
            MarkerKind::SaddleNode => "saddle-node",
            MarkerKind::SymmetryBreaking => "symmetry-breaking",
        }
    }
}

impl From<DstEventKind> for MarkerKind {
    fn from(k: DstEventKind) -> Self {
        match k {
            DstEventKind::Pitchfork => MarkerKind::Pitchfork,
            DstEventKind::Transcritical => MarkerKind::Transcritical,
            DstEventKind::Fold => MarkerKind::Fold,
            DstEventKind::SaddleNode => MarkerKind::SaddleNode,
            DstEventKind::SymmetryBreaking => MarkerKind::SymmetryBreaking,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marker {
    pub x: f64,
    pub y: f64,
    pub kind: MarkerKind,
}

/// One curve of a diagram. Non-finite points break the curve.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub markers: Vec<Marker>,
}

impl Series {
    /// `(lambda, Q)` curve of a continuation branch, with its folds and branch points marked.
    pub fn from_branch(branch: &Branch, label: impl Into<String>) -> Self {
        let mut markers = Vec::new();
        for p in &branch.points {
            for (tag, kind) in [(EventTag::Fold, MarkerKind::Fold), (EventTag::BranchPoint, MarkerKind::BranchPoint)] {
                if p.has_tag(tag) {
                    markers.push(Marker { x: p.lambda, y: p.q, kind });
                }
            }
        }
        Self { label: label.into(), points: branch.points.iter().map(|p| (p.lambda, p.q)).collect(), markers }
    }

    /// `(Omega, Q)` curve of a sampled bowtie branch.
    pub fn from_dst(label: impl Into<String>, points: &[DstBranchPoint]) -> Self {
        Self { label: label.into(), points: points.iter().map(|p| (p.omega, p.q)).collect(), markers: Vec::new() }
    }

    /// Marker-only series holding bowtie events.
    pub fn dst_events(events: &[DstEvent]) -> Self {
        Self {
            label: "events".into(),
            points: Vec::new(),
            markers: events.iter().map(|e| Marker { x: e.omega, y: e.q, kind: e.kind.into() }).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagramStyle {
    pub width: u32,
    pub height: u32,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub legend: bool,
}

impl Default for DiagramStyle {
    fn default() -> Self {
        Self { width: 720, height: 480, title: String::new(), x_label: "Λ".into(), y_label: "Q".into(), legend: true }
    }
}

const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 52.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN_LEFT + (x - self.x0) / (self.x1 - self.x0) * (self.w - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        self.h - MARGIN_BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (self.h - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.04 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

/// Tick positions on a 1-2-5 grid and the number of decimals needed to print them.
fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|i| i as f64 * step).collect(), decimals)
}

fn tick_label(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn marker_svg(out: &mut String, x: f64, y: f64, kind: MarkerKind) {
    let class = kind.as_str();
    let _ = match kind {
        MarkerKind::Fold | MarkerKind::SaddleNode => {
            writeln!(out, r#"<circle class="marker {class}" cx="{x:.2}" cy="{y:.2}" r="4"/>"#)
        }
        MarkerKind::BranchPoint | MarkerKind::SymmetryBreaking => {
            writeln!(out, r#"<rect class="marker {class}" x="{:.2}" y="{:.2}" width="8" height="8"/>"#, x - 4.0, y - 4.0)
        }
        MarkerKind::Pitchfork => writeln!(
            out,
            r#"<polygon class="marker {class}" points="{x:.2},{:.2} {:.2},{y:.2} {x:.2},{:.2} {:.2},{y:.2}"/>"#,
            y - 5.0,
            x + 5.0,
            y + 5.0,
            x - 5.0
        ),
        MarkerKind::Transcritical => writeln!(
            out,
            r#"<polygon class="marker {class}" points="{x:.2},{:.2} {:.2},{:.2} {:.2},{:.2}"/>"#,
            y - 5.0,
            x + 5.0,
            y + 4.0,
            x - 5.0,
            y + 4.0
        ),
    };
}

/// Render curves in a common plane. Requires at least one series with a finite point or marker.
pub fn render_diagram(series: &[Series], style: &DiagramStyle) -> Result<String> {
    let coords = series
        .iter()
        .flat_map(|s| s.points.iter().copied().chain(s.markers.iter().map(|m| (m.x, m.y))))
        .filter(|(x, y)| x.is_finite() && y.is_finite());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (x, y) in coords {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return Err(Error::InvalidArgument("nothing to plot".into()));
    }
    if style.width < 200 || style.height < 150 {
        return Err(Error::InvalidArgument(format!("plot size {}x{} is too small", style.width, style.height)));
    }
    let (x0, x1) = padded(x0, x1);
    let (y0, y1) = padded(y0, y1);
    let fr = Frame { x0, x1, y0, y1, w: style.width as f64, h: style.height as f64 };
    let (left, right) = (MARGIN_LEFT, fr.w - MARGIN_RIGHT);
    let (top, bottom) = (MARGIN_TOP, fr.h - MARGIN_BOTTOM);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = style.width,
        h = style.height
    );
    out.push_str("<style>.marker{fill:#000;stroke:none}.axis{stroke:#000;stroke-width:1}.grid{stroke:#ddd;stroke-width:0.5}</style>\n");
    out.push_str(r#"<rect width="100%" height="100%" fill="white"/>"#);
    out.push('\n');
    if !style.title.is_empty() {
        let _ = writeln!(
            out,
            r#"<text class="title" x="{:.2}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
            (left + right) / 2.0,
            escape(&style.title)
        );
    }

    out.push_str("<g class=\"axes\">\n");
    let (xt, xd) = ticks(x0, x1);
    for v in xt {
        let p = fr.px(v);
        let _ = writeln!(out, r#"<line class="grid" x1="{p:.2}" y1="{top:.2}" x2="{p:.2}" y2="{bottom:.2}"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{p:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            bottom + 16.0,
            tick_label(v, xd)
        );
    }
    let (yt, yd) = ticks(y0, y1);
    for v in yt {
        let p = fr.py(v);
        let _ = writeln!(out, r#"<line class="grid" x1="{left:.2}" y1="{p:.2}" x2="{right:.2}" y2="{p:.2}"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            left - 6.0,
            p + 4.0,
            tick_label(v, yd)
        );
    }
    let _ = writeln!(
        out,
        r#"<rect class="axis" x="{left:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="none"/>"#,
        right - left,
        bottom - top
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        fr.h - 12.0,
        escape(&style.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        (top + bottom) / 2.0,
        (top + bottom) / 2.0,
        escape(&style.y_label)
    );
    out.push_str("</g>\n");

    let mut legend = Vec::new();
    let mut colour = 0;
    for s in series {
        if s.points.is_empty() {
            continue;
        }
        let c = PALETTE[colour % PALETTE.len()];
        colour += 1;
        legend.push((c, s.label.as_str()));
        let _ = writeln!(out, r#"<g class="series" data-label="{}">"#, escape(&s.label));
        let mut run: Vec<String> = Vec::new();
        let flush = |run: &mut Vec<String>, out: &mut String| {
            if run.len() >= 2 {
                let _ = writeln!(out, r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#, run.join(" "));
            }
            run.clear();
        };
        for &(x, y) in &s.points {
            if x.is_finite() && y.is_finite() {
                run.push(format!("{:.2},{:.2}", fr.px(x), fr.py(y)));
            } else {
                flush(&mut run, &mut out);
            }
        }
        flush(&mut run, &mut out);
        out.push_str("</g>\n");
    }

    out.push_str("<g class=\"events\">\n");
    for m in series.iter().flat_map(|s| &s.markers) {
        if m.x.is_finite() && m.y.is_finite() {
            marker_svg(&mut out, fr.px(m.x), fr.py(m.y), m.kind);
        }
    }
    out.push_str("</g>\n");

    if style.legend && !legend.is_empty() {
        out.push_str("<g class=\"legend\">\n");
        for (i, (c, label)) in legend.iter().enumerate() {
            let y = top + 14.0 + 16.0 * i as f64;
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{c}" stroke-width="2"/>"#,
                right - 150.0,
                y - 4.0,
                right - 130.0,
                y - 4.0
            );
            let _ = writeln!(out, r#"<text x="{:.2}" y="{y:.2}">{}</text>"#, right - 124.0, escape(label));
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Plot a graph function with its edges laid end to end, one curve per edge.
pub fn render_profile(f: &GraphFunction, style: &DiagramStyle) -> Result<String> {
    let mut offset = 0.0;
    let mut series = Vec::with_capacity(f.edges.len());
    for (m, e) in f.edges.iter().enumerate() {
        let points = e.values.iter().enumerate().map(|(i, &v)| (offset + i as f64 * e.h, v)).collect();
        offset += e.h * e.intervals() as f64;
        series.push(Series { label: format!("e{}", m + 1), points, markers: Vec::new() });
    }
    render_diagram(&series, style)
}
