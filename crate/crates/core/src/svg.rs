//! Standalone SVG 1.1 export of a [`LayoutScene`].

use std::f64::consts::PI;
use std::fmt::Write as _;

use thiserror::Error;

use crate::layout::{polar_to_planar, BarRing, LayoutScene, RadialPath, Rings};

/// Tableau 10.
pub const DEFAULT_PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac",
];

/// Opacity of classes outside the highlight range.
pub const DIM_OPACITY: &str = "0.25";

/// Space left around the outermost band when the canvas size is derived.
pub const CANVAS_MARGIN_PX: f64 = 40.0;

#[derive(Debug, Error, PartialEq)]
pub enum SvgError {
    #[error("canvas of {size}px cannot hold rings out to radius {radius}px")]
    CanvasTooSmall { size: f64, radius: f64 },
    #[error("style palette is empty")]
    EmptyPalette,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvgStyle {
    /// Defaults to `2·(outer radius + 40)`.
    pub canvas_size_px: Option<f64>,
    pub stroke_width: f64,
    /// Ring colours, cycled when there are more rings than entries.
    pub palette: Vec<String>,
    pub background: String,
    pub hovered_color: String,
    pub matched_color: String,
}

impl Default for SvgStyle {
    fn default() -> Self {
        Self {
            canvas_size_px: None,
            stroke_width: 1.0,
            palette: DEFAULT_PALETTE.iter().map(|s| s.to_string()).collect(),
            background: "white".into(),
            hovered_color: "red".into(),
            matched_color: "blue".into(),
        }
    }
}

impl SvgStyle {
    pub fn canvas_size(&self, scene: &LayoutScene) -> f64 {
        self.canvas_size_px
            .unwrap_or_else(|| 2.0 * (scene.outer_radius() + CANVAS_MARGIN_PX))
    }

    fn ring_color(&self, ring: usize) -> &str {
        &self.palette[ring % self.palette.len()]
    }
}

/// Two decimals, never `-0.00`.
fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub fn render_svg(scene: &LayoutScene, style: &SvgStyle) -> Result<String, SvgError> {
    if style.palette.is_empty() {
        return Err(SvgError::EmptyPalette);
    }
    let size = style.canvas_size(scene);
    let radius = scene.outer_radius();
    if size < 2.0 * radius {
        return Err(SvgError::CanvasTooSmall { size, radius });
    }
    let center = size / 2.0;
    let s = num(size);

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">"
    );
    let _ = writeln!(
        out,
        "<style>.hovered{{stroke:{h};fill:{h}}}.matched{{stroke:{m};fill:{m}}}</style>",
        h = escape(&style.hovered_color),
        m = escape(&style.matched_color)
    );
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{s}\" height=\"{s}\" fill=\"{}\"/>",
        escape(&style.background)
    );
    match &scene.rings {
        Rings::Line(paths) => {
            for path in paths {
                write_line_ring(&mut out, scene, style, path, center);
            }
        }
        Rings::Bar(rings) => {
            for ring in rings {
                write_bar_ring(&mut out, scene, style, ring, center);
            }
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn open_ring(out: &mut String, name: &str, ring: usize) {
    let name = escape(name);
    let _ = writeln!(
        out,
        "<g class=\"ring\" data-ring=\"{ring}\" data-model=\"{name}\"><title>{name}</title>"
    );
}

fn write_points(out: &mut String, points: impl Iterator<Item = [f64; 2]>, center: f64) {
    for (i, [x, y]) in points.enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{},{}", num(center + x), num(center + y));
    }
}

fn write_line_ring(
    out: &mut String,
    scene: &LayoutScene,
    style: &SvgStyle,
    path: &RadialPath,
    center: f64,
) {
    let color = style.ring_color(path.ring_index);
    open_ring(out, &path.model_name, path.ring_index);
    out.push_str("<path d=\"");
    for (i, [x, y]) in path.polyline.iter().enumerate() {
        let cmd = if i == 0 { "M" } else { " L" };
        let _ = write!(out, "{cmd}{} {}", num(center + x), num(center + y));
    }
    let _ = write!(
        out,
        " Z\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{}\"",
        style.stroke_width
    );
    if scene.config.highlight_range.is_some() {
        let _ = write!(out, " opacity=\"{DIM_OPACITY}\"");
    }
    out.push_str("/>\n");

    if let Some((lo, hi)) = scene.config.highlight_range {
        // Re-draw the highlighted span at full opacity, from knot `lo`
        // through knot `hi + 1` (wrapping to the first knot).
        let per = path.polyline.len() / path.knots.len().max(1);
        let start = lo * per;
        let end = (hi + 1) * per;
        let len = path.polyline.len();
        out.push_str("<polyline class=\"highlight\" points=\"");
        write_points(
            out,
            (start..=end).map(|i| path.polyline[i % len]),
            center,
        );
        let _ = writeln!(
            out,
            "\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{}\"/>",
            style.stroke_width
        );
    }
    out.push_str("</g>\n");
}

fn write_bar_ring(
    out: &mut String,
    scene: &LayoutScene,
    style: &SvgStyle,
    ring: &BarRing,
    center: f64,
) {
    let color = style.ring_color(ring.ring_index);
    open_ring(out, &ring.model_name, ring.ring_index);
    for bar in &ring.bars {
        let at = |angle: f64, r: f64| {
            let [x, y] = polar_to_planar(angle, r);
            format!("{} {}", num(center + x), num(center + y))
        };
        let (a0, a1) = (bar.angle_start, bar.angle_end);
        let (ri, ro) = (bar.inner_radius, bar.outer_radius);
        let (ri_s, ro_s) = (num(ri), num(ro));
        let _ = write!(
            out,
            "<path class=\"sector\" data-class=\"{}\" d=\"M{}",
            bar.class_index,
            at(a0, ro)
        );
        // A single arc cannot sweep half a turn or more reliably; split it.
        if a1 - a0 >= PI {
            let mid = (a0 + a1) / 2.0;
            let _ = write!(
                out,
                " A{ro_s} {ro_s} 0 0 1 {} A{ro_s} {ro_s} 0 0 1 {} L{} A{ri_s} {ri_s} 0 0 0 {} A{ri_s} {ri_s} 0 0 0 {} Z",
                at(mid, ro),
                at(a1, ro),
                at(a1, ri),
                at(mid, ri),
                at(a0, ri)
            );
        } else {
            let _ = write!(
                out,
                " A{ro_s} {ro_s} 0 0 1 {} L{} A{ri_s} {ri_s} 0 0 0 {} Z",
                at(a1, ro),
                at(a1, ri),
                at(a0, ri)
            );
        }
        let _ = write!(out, "\" fill=\"{color}\" stroke=\"none\"");
        if !scene.config.is_highlighted(bar.class_index) {
            let _ = write!(out, " opacity=\"{DIM_OPACITY}\"");
        }
        out.push_str("/>\n");
    }
    out.push_str("</g>\n");
}
