//! Self-contained SVG charts with fixed styling, so identical data gives
//! identical bytes.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

const PALETTE: [&str; 8] = [
    "#1f4e79", "#c0504d", "#4f8f3a", "#8064a2", "#d08a1e", "#2b8c9c", "#7f7f7f", "#a05a2c",
];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Solid,
    Dashed,
    /// Markers only.
    Points,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
    pub color: usize,
    /// Symmetric vertical error bars, one per point.
    pub error: Option<Vec<f64>>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, style: Style, color: usize) -> Self {
        Series {
            label: label.into(),
            points,
            style,
            color,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

fn n(x: f64) -> String {
    let s = format!("{x:.2}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// "Nice" tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() * step;
    (0..)
        .map(|i| first + step * i as f64)
        .take_while(|t| *t <= hi + step * 1e-9)
        .collect()
}

fn tick_label(t: f64) -> String {
    if t == 0.0 {
        return "0".into();
    }
    if t.abs() >= 1e4 || t.abs() < 1e-3 {
        return format!("{t:.1e}");
    }
    let s = format!("{t:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn fit(values: impl Iterator<Item = (f64, f64)>) -> Frame {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (x, y) in values.filter(|(x, y)| x.is_finite() && y.is_finite()) {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 < 1e-12 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 < 1e-12 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let pad = 0.05 * (y1 - y0);
        Frame {
            x0,
            x1,
            y0: y0 - pad,
            y1: y1 + pad,
        }
    }

    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}" font-family="sans-serif" font-size="12">"#,
        WIDTH, HEIGHT, WIDTH, HEIGHT
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        n((LEFT + WIDTH - RIGHT) / 2.0),
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (l, r, t, b) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        out,
        r#"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        n(l),
        n(t),
        n(r - l),
        n(b - t)
    );
    for tx in ticks(f.x0, f.x1) {
        let x = f.px(tx);
        let _ = writeln!(
            out,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/><text x="{0}" y="{3}" text-anchor="middle">{4}</text>"#,
            n(x),
            n(b),
            n(b + 5.0),
            n(b + 18.0),
            tick_label(tx)
        );
    }
    for ty in ticks(f.y0, f.y1) {
        let y = f.py(ty);
        let _ = writeln!(
            out,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/><text x="{3}" y="{4}" text-anchor="end">{5}</text>"#,
            n(l - 5.0),
            n(y),
            n(l),
            n(l - 8.0),
            n(y + 4.0),
            tick_label(ty)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        n((l + r) / 2.0),
        n(HEIGHT - 12.0),
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        n((t + b) / 2.0),
        escape(y_label)
    );
}

fn legend(out: &mut String, entries: &[(String, usize, Style)]) {
    let x = WIDTH - RIGHT + 12.0;
    for (i, (label, c, style)) in entries.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        match style {
            Style::Points => {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{}" cy="{}" r="3" fill="{}"/>"#,
                    n(x + 10.0),
                    n(y),
                    color(*c)
                );
            }
            _ => {
                let dash = if *style == Style::Dashed { r#" stroke-dasharray="5,3""# } else { "" };
                let _ = writeln!(
                    out,
                    r#"<line x1="{0}" y1="{2}" x2="{1}" y2="{2}" stroke="{3}" stroke-width="2"{4}/>"#,
                    n(x),
                    n(x + 20.0),
                    n(y),
                    color(*c),
                    dash
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}">{}</text>"#,
            n(x + 26.0),
            n(y + 4.0),
            escape(label)
        );
    }
}

/// Lines, dashed lines and scatter series on shared axes.
pub fn chart(c: &Chart) -> String {
    let frame = Frame::fit(c.series.iter().flat_map(|s| {
        let err = s.error.clone().unwrap_or_else(|| vec![0.0; s.points.len()]);
        s.points
            .iter()
            .zip(err)
            .flat_map(|(&(x, y), e)| [(x, y - e), (x, y + e)])
            .collect::<Vec<_>>()
    }));
    let mut out = String::new();
    open(&mut out, &c.title);
    axes(&mut out, &frame, &c.x_label, &c.y_label);
    for s in &c.series {
        let pts: Vec<(f64, f64)> = s
            .points
            .iter()
            .copied()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        match s.style {
            Style::Points => {
                for (x, y) in &pts {
                    let _ = writeln!(
                        out,
                        r#"<circle cx="{}" cy="{}" r="3" fill="{}" fill-opacity="0.6"/>"#,
                        n(frame.px(*x)),
                        n(frame.py(*y)),
                        color(s.color)
                    );
                }
            }
            Style::Solid | Style::Dashed => {
                if pts.is_empty() {
                    continue;
                }
                let path: Vec<String> = pts
                    .iter()
                    .map(|(x, y)| format!("{},{}", n(frame.px(*x)), n(frame.py(*y))))
                    .collect();
                let dash = if s.style == Style::Dashed { r#" stroke-dasharray="6,4""# } else { "" };
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2"{}/>"#,
                    path.join(" "),
                    color(s.color),
                    dash
                );
            }
        }
        if let Some(err) = &s.error {
            for (&(x, y), e) in s.points.iter().zip(err) {
                if !(x.is_finite() && y.is_finite() && e.is_finite()) {
                    continue;
                }
                let _ = writeln!(
                    out,
                    r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="{3}"/>"#,
                    n(frame.px(x)),
                    n(frame.py(y - e)),
                    n(frame.py(y + e)),
                    color(s.color)
                );
            }
        }
    }
    let entries: Vec<(String, usize, Style)> = c
        .series
        .iter()
        .filter(|s| !s.label.is_empty())
        .map(|s| (s.label.clone(), s.color, s.style))
        .collect();
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

/// One histogram layer: bin edges (`counts.len() + 1` of them) and counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Bars {
    pub label: String,
    pub edges: Vec<f64>,
    /// Heights, already normalized if desired.
    pub heights: Vec<f64>,
    pub color: usize,
}

/// Overlaid translucent histograms.
pub fn histogram(title: &str, x_label: &str, y_label: &str, layers: &[Bars]) -> String {
    let frame = Frame::fit(layers.iter().flat_map(|b| {
        let lo = b.edges.first().copied().unwrap_or(0.0);
        let hi = b.edges.last().copied().unwrap_or(1.0);
        let top = b.heights.iter().copied().fold(0.0, f64::max);
        [(lo, 0.0), (hi, top)]
    }));
    let frame = Frame {
        y0: 0.0,
        ..frame
    };
    let mut out = String::new();
    open(&mut out, title);
    axes(&mut out, &frame, x_label, y_label);
    for layer in layers {
        for (w, h) in layer.edges.windows(2).zip(&layer.heights) {
            if *h <= 0.0 {
                continue;
            }
            let (x0, x1) = (frame.px(w[0]), frame.px(w[1]));
            let (y_top, y_base) = (frame.py(*h), frame.py(0.0));
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}" fill-opacity="0.5" stroke="{}"/>"#,
                n(x0),
                n(y_top),
                n(x1 - x0),
                n(y_base - y_top),
                color(layer.color),
                color(layer.color)
            );
        }
    }
    let entries: Vec<(String, usize, Style)> = layers
        .iter()
        .map(|b| (b.label.clone(), b.color, Style::Solid))
        .collect();
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_deterministic_and_well_formed() {
        let c = Chart {
            title: "a < b".into(),
            x_label: "t".into(),
            y_label: "y".into(),
            series: vec![
                Series::new("full", vec![(0.0, 0.0), (1.0, 2.0)], Style::Solid, 0),
                Series::new("drop", vec![(0.0, 0.0), (1.0, 1.5)], Style::Dashed, 0),
                Series::new("pts", vec![(0.5, f64::NAN), (0.2, 1.0)], Style::Points, 1),
            ],
        };
        let a = chart(&c);
        assert_eq!(a, chart(&c));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
        assert!(a.contains("stroke-dasharray"));
        assert!(a.contains("a &lt; b"));
        assert_eq!(a.matches("<polyline").count(), 2);
    }

    #[test]
    fn histogram_skips_empty_bins() {
        let h = histogram(
            "h",
            "x",
            "n",
            &[Bars {
                label: "one".into(),
                edges: vec![0.0, 1.0, 2.0, 3.0],
                heights: vec![1.0, 0.0, 2.0],
                color: 0,
            }],
        );
        assert_eq!(h.matches("fill-opacity=\"0.5\"").count(), 2);
    }

    #[test]
    fn tick_positions() {
        assert_eq!(ticks(0.0, 1.0).len(), 6);
        assert!(ticks(-1.0, 1.0).contains(&0.0));
    }
}
