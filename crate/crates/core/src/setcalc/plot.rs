//! Vertex dumps for planar sets: CSV blocks and a small SVG renderer.

use std::fmt::Write as _;

use nalgebra::DVector;

/// How a polygon is drawn in SVG output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Hatched,
    Filled,
    Outline,
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub name: String,
    pub vertices: Vec<DVector<f64>>,
    pub style: Style,
}

/// One block per set: a `# set <name>` header followed by `x,y` rows.
/// One-dimensional sets are written with `y = 0`.
pub fn vertices_csv(layers: &[Layer]) -> String {
    let mut out = String::new();
    for layer in layers {
        let _ = writeln!(out, "# set {}", layer.name);
        for v in &layer.vertices {
            let y = if v.len() > 1 { v[1] } else { 0.0 };
            let _ = writeln!(out, "{},{}", v[0], y);
        }
    }
    out
}

/// Renders all layers into one SVG document whose view box is the common
/// bounding box scaled to unit size (y axis pointing up).
pub fn svg(layers: &[Layer]) -> String {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for v in layers.iter().flat_map(|l| &l.vertices) {
        for k in 0..2 {
            let c = if k < v.len() { v[k] } else { 0.0 };
            lo[k] = lo[k].min(c);
            hi[k] = hi[k].max(c);
        }
    }
    if !lo[0].is_finite() {
        lo = [-1.0, -1.0];
        hi = [1.0, 1.0];
    }
    let sx = (hi[0] - lo[0]).max(1e-12);
    let sy = (hi[1] - lo[1]).max(1e-12);
    let map = |v: &DVector<f64>| {
        let y = if v.len() > 1 { v[1] } else { 0.0 };
        ((v[0] - lo[0]) / sx, (hi[1] - y) / sy)
    };

    let mut out = String::new();
    out.push_str(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"-0.05 -0.05 1.1 1.1\" width=\"600\" height=\"600\">\n",
    );
    out.push_str(
        "<defs><pattern id=\"hatch\" width=\"0.02\" height=\"0.02\" patternUnits=\"userSpaceOnUse\" \
         patternTransform=\"rotate(45)\"><line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"0.02\" stroke=\"#555\" \
         stroke-width=\"0.004\"/></pattern></defs>\n",
    );
    for layer in layers {
        let mut d = String::new();
        for (k, v) in layer.vertices.iter().enumerate() {
            let (x, y) = map(v);
            let _ = write!(d, "{}{:.6} {:.6} ", if k == 0 { "M" } else { "L" }, x, y);
        }
        d.push('Z');
        let (fill, opacity) = match layer.style {
            Style::Hatched => ("url(#hatch)", 1.0),
            Style::Filled => ("#3b7dd8", 0.6),
            Style::Outline => ("none", 1.0),
        };
        let _ = writeln!(
            out,
            "<path id=\"{}\" d=\"{}\" fill=\"{}\" fill-opacity=\"{}\" stroke=\"#000\" stroke-width=\"0.003\"/>",
            escape(&layer.name),
            d,
            fill,
            opacity
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
