//! Normalized histograms rendered as self-contained SVG, with a CSV
//! sidecar carrying the binned densities.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use varcurve::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 62.0;
const MARGIN_RIGHT: f64 = 22.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 48.0;

/// Binned density estimate: `densities[i]` integrates to the fraction of
/// values in bin `i`, so the whole histogram integrates to exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub bin_width: f64,
    pub counts: Vec<usize>,
    pub densities: Vec<f64>,
}

impl Histogram {
    pub fn bin_center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.bin_width
    }
}

pub fn build_histogram(values: &[f64], bins: usize) -> Result<Histogram> {
    if values.is_empty() {
        return Err(Error::Domain("histogram needs at least one value".into()));
    }
    if bins == 0 {
        return Err(Error::Domain("histogram needs at least one bin".into()));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite histogram value {bad}")));
    }
    let mut lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        // Degenerate sample: give the single point a visible width.
        let w = (lo.abs() * 1e-3).max(1e-9);
        lo -= 0.5 * w;
        hi += 0.5 * w;
    }
    let bin_width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let idx = (((v - lo) / bin_width) as usize).min(bins - 1);
        counts[idx] += 1;
    }
    let norm = 1.0 / (values.len() as f64 * bin_width);
    let densities = counts.iter().map(|&c| c as f64 * norm).collect();
    Ok(Histogram { lo, hi, bin_width, counts, densities })
}

fn render_svg(hist: &Histogram, reference: f64) -> String {
    // Stretch the x axis so the reference line is always on the canvas.
    let span_pad = 0.02 * (hist.hi - hist.lo);
    let x_lo = hist.lo.min(reference) - span_pad;
    let x_hi = hist.hi.max(reference) + span_pad;
    let y_max = hist.densities.iter().copied().fold(f64::MIN, f64::max) * 1.08;
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_px = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let y_px = |y: f64| MARGIN_TOP + (1.0 - y / y_max) * plot_h;
    let base = y_px(0.0);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    for (i, &d) in hist.densities.iter().enumerate() {
        if d == 0.0 {
            continue;
        }
        let x0 = x_px(hist.lo + i as f64 * hist.bin_width);
        let x1 = x_px(hist.lo + (i as f64 + 1.0) * hist.bin_width);
        let top = y_px(d);
        let _ = writeln!(
            svg,
            r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#4878a8"/>"##,
            x0,
            top,
            (x1 - x0).max(0.5),
            base - top
        );
    }
    // Axes.
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN_LEFT}" y1="{base:.2}" x2="{:.2}" y2="{base:.2}" stroke="black" stroke-width="1"/>"#,
        WIDTH - MARGIN_RIGHT
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{base:.2}" stroke="black" stroke-width="1"/>"#
    );
    // Reference marker.
    let rx = x_px(reference);
    let _ = writeln!(
        svg,
        r##"<line x1="{rx:.2}" y1="{MARGIN_TOP}" x2="{rx:.2}" y2="{base:.2}" stroke="#c03028" stroke-width="1.5" stroke-dasharray="6 4"/>"##
    );
    let _ = writeln!(
        svg,
        r##"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" fill="#c03028">{reference:.4}</text>"##,
        rx + 4.0,
        MARGIN_TOP + 12.0
    );
    // Tick labels.
    let _ = writeln!(
        svg,
        r#"<text x="{MARGIN_LEFT}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{x_lo:.4}</text>"#,
        base + 18.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{x_hi:.4}</text>"#,
        WIDTH - MARGIN_RIGHT,
        base + 18.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{:.4}</text>"#,
        MARGIN_LEFT - 6.0,
        MARGIN_TOP + 12.0,
        y_max
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">0</text>"#,
        MARGIN_LEFT - 6.0,
        base
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="13" text-anchor="middle">density</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 8.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// Bins `values`, writes a normalized SVG histogram with a vertical
/// reference line at `reference` to `out`, and a CSV of
/// `(bin_center, density)` rows next to it (same stem, `.csv`).
pub fn emit_histogram(
    values: &[f64],
    bins: usize,
    reference: f64,
    out: &Path,
) -> Result<Histogram> {
    let hist = build_histogram(values, bins)?;
    fs::write(out, render_svg(&hist, reference))?;
    let mut csv = String::from("bin_center,density\n");
    for i in 0..hist.densities.len() {
        let _ = writeln!(csv, "{:.17e},{:.17e}", hist.bin_center(i), hist.densities[i]);
    }
    fs::write(out.with_extension("csv"), csv)?;
    Ok(hist)
}
