//! Minimal deterministic SVG line plots.

use std::fmt::Write;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    /// Gradient trajectories.
    Dashed,
    /// Minima curves.
    Solid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

impl Curve {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>, style: Style) -> Self {
        Curve { label: label.into(), points, style }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SvgError {
    #[error("nothing to plot: need at least one curve with two or more finite points")]
    EmptyInput,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Renders the curves in data coordinates (`y` up). The viewBox spans the
/// data extents plus a 5% margin on each side.
pub fn render_svg(curves: &[Curve], title: &str) -> Result<String, SvgError> {
    let finite: Vec<Vec<(f64, f64)>> = curves
        .iter()
        .map(|c| c.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect())
        .collect();
    if curves.is_empty() || finite.iter().any(|p: &Vec<_>| p.len() < 2) {
        return Err(SvgError::EmptyInput);
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in finite.iter().flatten() {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let span_x = if x1 > x0 { x1 - x0 } else { 1.0 };
    let span_y = if y1 > y0 { y1 - y0 } else { 1.0 };
    let (mx, my) = (0.05 * span_x, 0.05 * span_y);
    let (vx, vw) = (x0 - mx, span_x + 2.0 * mx);
    let (vy, vh) = (-(y1 + my), span_y + 2.0 * my);
    let stroke = 2.0e-3 * vw.max(vh);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="{} {} {} {}" preserveAspectRatio="none">"#,
        num(vx),
        num(vy),
        num(vw),
        num(vh)
    );
    let _ = writeln!(out, "<title>{}</title>", escape(title));
    for (i, (c, pts)) in curves.iter().zip(&finite).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut d = String::new();
        for (j, (x, y)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{} {}", if j == 0 { "M" } else { " L" }, num(*x), num(-*y));
        }
        let dash = match c.style {
            Style::Dashed => format!(r#" stroke-dasharray="{} {}""#, num(4.0 * stroke), num(3.0 * stroke)),
            Style::Solid => String::new(),
        };
        let _ = writeln!(
            out,
            r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="{}"{dash} vector-effect="non-scaling-stroke"><title>{}</title></path>"#,
            num(stroke),
            escape(&c.label)
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn num(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_segment() {
        let svg = render_svg(&[Curve::new("a", vec![(0.0, 0.0), (1.0, 2.0)], Style::Solid)], "t").unwrap();
        assert_eq!(svg.matches("<path").count(), 1);
        assert!(svg.contains(r#"viewBox="-0.05 -2.1 1.1 2.2""#), "{svg}");
        assert!(!svg.contains("dasharray"));
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(render_svg(&[], "t"), Err(SvgError::EmptyInput));
        let one = Curve::new("a", vec![(0.0, 0.0), (f64::NAN, 1.0)], Style::Dashed);
        assert_eq!(render_svg(&[one], "t"), Err(SvgError::EmptyInput));
    }

    #[test]
    fn number_format() {
        assert_eq!(num(-0.0000001), "0");
        assert_eq!(num(2.5), "2.5");
        assert_eq!(num(3.0), "3");
    }
}
