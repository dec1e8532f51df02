//! Concentric radial geometry.
//!
//! Each model gets a ring. Class `c` of `N` sits at angle `c·2π/N`, measured
//! clockwise from 12 o'clock, and a metric value `v` in `[0, 1]` is drawn at
//! `base + v·band` px from the centre. In line mode the per-class knots of a
//! ring are joined by a closed centripetal Catmull-Rom spline; in bar mode
//! every class becomes an annular sector.
//!
//! Planar coordinates are relative to a `(0, 0)` centre with screen axes:
//! `x = r·sin θ`, `y = −r·cos θ`.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::MetricMatrix;

pub const DEFAULT_INNER_RADIUS_PX: f64 = 120.0;
pub const DEFAULT_BAND_WIDTH_PX: f64 = 10.0;
pub const DEFAULT_RING_SPACING_PX: f64 = 15.0;
pub const DEFAULT_SAMPLES_PER_SEGMENT: usize = 8;
/// Bounds of the user-adjustable gap between neighbouring rings.
pub const MIN_RING_SPACING_PX: f64 = 10.0;
pub const MAX_RING_SPACING_PX: f64 = 60.0;
/// Rings the layout is guaranteed to hold.
pub const MAX_RINGS: usize = 20;
/// Centripetal parameterisation exponent.
pub const CATMULL_ROM_ALPHA: f64 = 0.5;

pub type Point = [f64; 2];

#[derive(Debug, Error, PartialEq)]
pub enum LayoutError {
    #[error("class {class} out of range for {class_count} classes")]
    ClassOutOfRange { class: usize, class_count: usize },
    #[error("metric value {0} is outside [0, 1]")]
    ValueOutOfRange(f64),
    #[error("invalid view config: {0}")]
    BadConfig(String),
    #[error("closed spline needs at least 3 distinct knots, got {0}")]
    TooFewKnots(usize),
    #[error("metric matrix has no models")]
    EmptyMatrix,
    #[error("config asks for {expected} mode")]
    ModeMismatch { expected: Mode },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Line,
    Bar,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Line => "line",
            Mode::Bar => "bar",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "line" => Ok(Mode::Line),
            "bar" => Ok(Mode::Bar),
            other => Err(format!("unknown mode {other:?}; expected line or bar")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewConfig {
    pub inner_radius_px: f64,
    /// Radial extent the metric range `[0, 1]` maps onto.
    pub band_width_px: f64,
    /// Empty gap between one ring's band and the next ring's base.
    pub ring_spacing_px: f64,
    pub mode: Mode,
    pub samples_per_segment: usize,
    /// Inclusive class interval drawn at full opacity; `None` highlights all.
    pub highlight_range: Option<(usize, usize)>,
}

impl Default for ViewConfig {
    fn default() -> Self {
        Self {
            inner_radius_px: DEFAULT_INNER_RADIUS_PX,
            band_width_px: DEFAULT_BAND_WIDTH_PX,
            ring_spacing_px: DEFAULT_RING_SPACING_PX,
            mode: Mode::Line,
            samples_per_segment: DEFAULT_SAMPLES_PER_SEGMENT,
            highlight_range: None,
        }
    }
}

impl ViewConfig {
    pub fn validate(&self, class_count: usize) -> Result<(), LayoutError> {
        let bad = |msg: String| Err(LayoutError::BadConfig(msg));
        if !(self.inner_radius_px.is_finite() && self.inner_radius_px >= 0.0) {
            return bad(format!("inner radius {} must be >= 0", self.inner_radius_px));
        }
        if !(self.band_width_px.is_finite() && self.band_width_px > 0.0) {
            return bad(format!("band width {} must be > 0", self.band_width_px));
        }
        if !(MIN_RING_SPACING_PX..=MAX_RING_SPACING_PX).contains(&self.ring_spacing_px) {
            return bad(format!(
                "ring spacing {} must be within [{MIN_RING_SPACING_PX}, {MAX_RING_SPACING_PX}]",
                self.ring_spacing_px
            ));
        }
        if self.samples_per_segment == 0 {
            return bad("samples per segment must be >= 1".into());
        }
        if let Some((lo, hi)) = self.highlight_range {
            if lo > hi || hi >= class_count {
                return bad(format!(
                    "highlight range {lo}-{hi} must satisfy lo <= hi < {class_count}"
                ));
            }
        }
        Ok(())
    }

    pub fn is_highlighted(&self, class: usize) -> bool {
        self.highlight_range
            .map_or(true, |(lo, hi)| (lo..=hi).contains(&class))
    }
}

pub fn class_angle(class: usize, class_count: usize) -> Result<f64, LayoutError> {
    if class >= class_count {
        return Err(LayoutError::ClassOutOfRange { class, class_count });
    }
    Ok(class as f64 * TAU / class_count as f64)
}

pub fn ring_base_radius(ring: usize, config: &ViewConfig) -> f64 {
    config.inner_radius_px + ring as f64 * (config.band_width_px + config.ring_spacing_px)
}

pub fn value_radius(value: f64, base: f64, band: f64) -> Result<f64, LayoutError> {
    if !(0.0..=1.0).contains(&value) {
        return Err(LayoutError::ValueOutOfRange(value));
    }
    Ok(base + value * band)
}

pub fn polar_to_planar(angle: f64, radius: f64) -> Point {
    [radius * angle.sin(), -radius * angle.cos()]
}

/// Closed centripetal Catmull-Rom curve through `knots`, sampled
/// `samples_per_segment` times per segment starting at each knot.
pub fn catmull_rom_closed(
    knots: &[Point],
    samples_per_segment: usize,
) -> Result<Vec<Point>, LayoutError> {
    catmull_rom_periodic(knots, [0.0, 0.0], samples_per_segment)
}

/// Like [`catmull_rom_closed`], but the curve continues past the last knot
/// into the first knot shifted by `period`. With a zero period this is the
/// ordinary closed curve; a ring unrolled into (arc length, radius) uses a
/// period of one circumference.
pub fn catmull_rom_periodic(
    knots: &[Point],
    period: Point,
    samples_per_segment: usize,
) -> Result<Vec<Point>, LayoutError> {
    let samples = samples_per_segment.max(1);
    let mut pts: Vec<Point> = Vec::with_capacity(knots.len());
    for &k in knots {
        if pts.last() != Some(&k) {
            pts.push(k);
        }
    }
    while pts.len() > 1 {
        let first = pts[0];
        let wrapped = [first[0] + period[0], first[1] + period[1]];
        if *pts.last().unwrap() == wrapped {
            pts.pop();
        } else {
            break;
        }
    }
    let n = pts.len();
    if n < 3 {
        return Err(LayoutError::TooFewKnots(n));
    }

    let ghost = |i: isize| -> Point {
        let wraps = i.div_euclid(n as isize) as f64;
        let p = pts[i.rem_euclid(n as isize) as usize];
        [p[0] + wraps * period[0], p[1] + wraps * period[1]]
    };

    let mut out = Vec::with_capacity(n * samples);
    for i in 0..n as isize {
        let seg = Segment::new([ghost(i - 1), ghost(i), ghost(i + 1), ghost(i + 2)]);
        for k in 0..samples {
            out.push(seg.at(k as f64 / samples as f64));
        }
    }
    Ok(out)
}

/// The middle span of a four-point centripetal Catmull-Rom curve.
struct Segment {
    points: [Point; 4],
    t: [f64; 4],
}

impl Segment {
    fn new(points: [Point; 4]) -> Self {
        let mut t = [0.0; 4];
        for i in 1..4 {
            let d = distance(points[i - 1], points[i]);
            t[i] = t[i - 1] + d.powf(CATMULL_ROM_ALPHA);
        }
        Self { points, t }
    }

    /// Point at fraction `u` of the way from `points[1]` to `points[2]`,
    /// by Barry-Goldman pyramidal interpolation.
    fn at(&self, u: f64) -> Point {
        let [p0, p1, p2, p3] = self.points;
        let [t0, t1, t2, t3] = self.t;
        let t = t1 + u * (t2 - t1);
        let a1 = lerp(p0, p1, t0, t1, t);
        let a2 = lerp(p1, p2, t1, t2, t);
        let a3 = lerp(p2, p3, t2, t3, t);
        let b1 = lerp(a1, a2, t0, t2, t);
        let b2 = lerp(a2, a3, t1, t3, t);
        lerp(b1, b2, t1, t2, t)
    }
}

fn lerp(p: Point, q: Point, ti: f64, tj: f64, t: f64) -> Point {
    let w = (t - ti) / (tj - ti);
    [p[0] + w * (q[0] - p[0]), p[1] + w * (q[1] - p[1])]
}

fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayoutPoint {
    pub class_index: usize,
    pub angle: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialPath {
    pub model_name: String,
    pub ring_index: usize,
    pub base_radius: f64,
    pub knots: Vec<LayoutPoint>,
    /// Closed curve in planar coordinates; `samples_per_segment` points per
    /// class, the first of each group being that class's knot.
    pub polyline: Vec<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialBar {
    pub class_index: usize,
    pub angle_start: f64,
    pub angle_end: f64,
    pub inner_radius: f64,
    pub outer_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarRing {
    pub model_name: String,
    pub ring_index: usize,
    pub base_radius: f64,
    pub bars: Vec<RadialBar>,
}

/// Rings in import order, innermost first.
#[derive(Debug, Clone, PartialEq)]
pub enum Rings {
    Line(Vec<RadialPath>),
    Bar(Vec<BarRing>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutScene {
    pub config: ViewConfig,
    pub class_count: usize,
    pub rings: Rings,
}

impl LayoutScene {
    pub fn mode(&self) -> Mode {
        match self.rings {
            Rings::Line(_) => Mode::Line,
            Rings::Bar(_) => Mode::Bar,
        }
    }

    pub fn ring_count(&self) -> usize {
        match &self.rings {
            Rings::Line(r) => r.len(),
            Rings::Bar(r) => r.len(),
        }
    }

    pub fn model_names(&self) -> Vec<&str> {
        match &self.rings {
            Rings::Line(r) => r.iter().map(|p| p.model_name.as_str()).collect(),
            Rings::Bar(r) => r.iter().map(|p| p.model_name.as_str()).collect(),
        }
    }

    /// Outer edge of the outermost band.
    pub fn outer_radius(&self) -> f64 {
        let rings = self.ring_count().max(1);
        ring_base_radius(rings - 1, &self.config) + self.config.band_width_px
    }

    /// `{"n", "mode", "band", "range", "rings": [...]}`; line rings carry
    /// `model`, `base`, `knots` as `[angle, radius]` and planar `polyline`,
    /// bar rings carry `model`, `base` and `bars` as
    /// `[angleStart, angleEnd, rInner, rOuter]`.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        #[serde(untagged)]
        enum RingDoc<'a> {
            Line {
                model: &'a str,
                base: f64,
                knots: Vec<[f64; 2]>,
                polyline: &'a [Point],
            },
            Bar {
                model: &'a str,
                base: f64,
                bars: Vec<[f64; 4]>,
            },
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            n: usize,
            mode: Mode,
            band: f64,
            range: Option<[usize; 2]>,
            rings: Vec<RingDoc<'a>>,
        }
        let rings = match &self.rings {
            Rings::Line(paths) => paths
                .iter()
                .map(|p| RingDoc::Line {
                    model: &p.model_name,
                    base: p.base_radius,
                    knots: p.knots.iter().map(|k| [k.angle, k.radius]).collect(),
                    polyline: &p.polyline,
                })
                .collect(),
            Rings::Bar(rings) => rings
                .iter()
                .map(|r| RingDoc::Bar {
                    model: &r.model_name,
                    base: r.base_radius,
                    bars: r
                        .bars
                        .iter()
                        .map(|b| [b.angle_start, b.angle_end, b.inner_radius, b.outer_radius])
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string(&Doc {
            n: self.class_count,
            mode: self.mode(),
            band: self.config.band_width_px,
            range: self.config.highlight_range.map(|(lo, hi)| [lo, hi]),
            rings,
        })
        .expect("scene serializes")
    }
}

fn check_matrix(matrix: &MetricMatrix, config: &ViewConfig) -> Result<(), LayoutError> {
    if matrix.is_empty() {
        return Err(LayoutError::EmptyMatrix);
    }
    config.validate(matrix.class_count)
}

pub fn build_line_scene(
    matrix: &MetricMatrix,
    config: &ViewConfig,
) -> Result<LayoutScene, LayoutError> {
    if config.mode != Mode::Line {
        return Err(LayoutError::ModeMismatch { expected: Mode::Line });
    }
    check_matrix(matrix, config)?;
    let n = matrix.class_count;
    let band = config.band_width_px;
    let paths = matrix
        .values
        .iter()
        .zip(&matrix.model_names)
        .enumerate()
        .map(|(m, (row, name))| {
            let base = ring_base_radius(m, config);
            let knots = row
                .iter()
                .enumerate()
                .map(|(c, &v)| {
                    Ok(LayoutPoint {
                        class_index: c,
                        angle: class_angle(c, n)?,
                        radius: value_radius(v, base, band)?,
                    })
                })
                .collect::<Result<Vec<_>, LayoutError>>()?;
            // Spline in the ring unrolled at its mid-band radius, so a row of
            // equal values stays on its circle instead of cutting chords.
            let reference = base + band / 2.0;
            let circumference = TAU * reference;
            let unrolled: Vec<Point> = knots
                .iter()
                .map(|k| [k.angle * reference, k.radius])
                .collect();
            let curve =
                catmull_rom_periodic(&unrolled, [circumference, 0.0], config.samples_per_segment)?;
            let polyline = curve
                .into_iter()
                .map(|[arc, r]| polar_to_planar(arc / reference, r))
                .collect();
            Ok(RadialPath {
                model_name: name.clone(),
                ring_index: m,
                base_radius: base,
                knots,
                polyline,
            })
        })
        .collect::<Result<Vec<_>, LayoutError>>()?;
    Ok(LayoutScene {
        config: config.clone(),
        class_count: n,
        rings: Rings::Line(paths),
    })
}

pub fn build_bar_scene(
    matrix: &MetricMatrix,
    config: &ViewConfig,
) -> Result<LayoutScene, LayoutError> {
    if config.mode != Mode::Bar {
        return Err(LayoutError::ModeMismatch { expected: Mode::Bar });
    }
    check_matrix(matrix, config)?;
    let n = matrix.class_count;
    let step = TAU / n as f64;
    let rings = matrix
        .values
        .iter()
        .zip(&matrix.model_names)
        .enumerate()
        .map(|(m, (row, name))| {
            let base = ring_base_radius(m, config);
            let bars = row
                .iter()
                .enumerate()
                .map(|(c, &v)| {
                    let start = class_angle(c, n)?;
                    Ok(RadialBar {
                        class_index: c,
                        angle_start: start,
                        angle_end: start + step,
                        inner_radius: base,
                        outer_radius: value_radius(v, base, config.band_width_px)?,
                    })
                })
                .collect::<Result<Vec<_>, LayoutError>>()?;
            Ok(BarRing {
                model_name: name.clone(),
                ring_index: m,
                base_radius: base,
                bars,
            })
        })
        .collect::<Result<Vec<_>, LayoutError>>()?;
    Ok(LayoutScene {
        config: config.clone(),
        class_count: n,
        rings: Rings::Bar(rings),
    })
}

/// Dispatches on `config.mode`.
pub fn build_scene(matrix: &MetricMatrix, config: &ViewConfig) -> Result<LayoutScene, LayoutError> {
    match config.mode {
        Mode::Line => build_line_scene(matrix, config),
        Mode::Bar => build_bar_scene(matrix, config),
    }
}
