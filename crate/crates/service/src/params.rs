//! View parameters shared by the HTTP query string and the CLI flags.

use circles_core::layout::{Mode, ViewConfig};
use circles_core::metrics::MetricId;
use serde::Deserialize;

/// Parses an inclusive class range written `LO-HI`.
pub fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once('-')
        .ok_or_else(|| format!("range {s:?} must look like LO-HI"))?;
    let lo: usize = lo.trim().parse().map_err(|_| format!("bad range start {lo:?}"))?;
    let hi: usize = hi.trim().parse().map_err(|_| format!("bad range end {hi:?}"))?;
    if lo > hi {
        return Err(format!("range start {lo} exceeds end {hi}"));
    }
    Ok((lo, hi))
}

pub fn parse_metric(s: &str) -> Result<MetricId, String> {
    s.parse::<MetricId>().map_err(|e| e.to_string())
}

/// `?metric=&mode=&spacing=&band=&inner=&range=lo-hi`; every field optional.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct LayoutParams {
    pub metric: Option<String>,
    pub mode: Option<String>,
    pub spacing: Option<f64>,
    pub band: Option<f64>,
    pub inner: Option<f64>,
    pub range: Option<String>,
}

impl LayoutParams {
    pub fn metric(&self) -> Result<MetricId, String> {
        match self.metric.as_deref() {
            None | Some("") => Ok(MetricId::Accuracy),
            Some(m) => parse_metric(m),
        }
    }

    /// Defaults overlaid with whatever was supplied. Range bounds against the
    /// class count are checked when the scene is built.
    pub fn view_config(&self) -> Result<ViewConfig, String> {
        let mut cfg = ViewConfig::default();
        if let Some(mode) = self.mode.as_deref().filter(|m| !m.is_empty()) {
            cfg.mode = mode.parse::<Mode>()?;
        }
        if let Some(spacing) = self.spacing {
            cfg.ring_spacing_px = spacing;
        }
        if let Some(band) = self.band {
            cfg.band_width_px = band;
        }
        if let Some(inner) = self.inner {
            cfg.inner_radius_px = inner;
        }
        if let Some(range) = self.range.as_deref().filter(|r| !r.is_empty()) {
            cfg.highlight_range = Some(parse_range(range)?);
        }
        Ok(cfg)
    }
}
