//! Self-contained SVG scatter plots for 2-D layouts.
//!
//! One `<circle>` per point — never more, never fewer — colored by
//! label from a fixed ten-color palette, with a legend, axes, and the
//! data range printed at the corners. The output is a plain string
//! assembled in a fixed order, so identical input gives identical
//! bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{CliError, Result};

/// Fill colors assigned to labels in order; label `l` takes color
/// `l % 10`.
pub const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac",
];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 54.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 42.0;
const MARGIN_BOTTOM: f64 = 44.0;

/// Render a scatter plot of `points` colored by `labels`.
///
/// `names`, when given, supplies legend text per label index;
/// otherwise legend entries read `label 0`, `label 1`, … Labels may be
/// any usize; colors repeat past ten.
pub fn scatter_svg(
    points: &[(f64, f64)],
    labels: &[usize],
    names: Option<&[String]>,
    title: &str,
) -> Result<String> {
    if points.len() != labels.len() {
        return Err(CliError::Artifact {
            path: "<scatter>".into(),
            detail: format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            ),
        });
    }
    if let Some(names) = names {
        if let Some(&too_big) = labels.iter().find(|&&l| l >= names.len()) {
            return Err(CliError::Artifact {
                path: "<scatter>".into(),
                detail: format!("label {too_big} has no name (got {} names)", names.len()),
            });
        }
    }

    let (x_lo, x_hi) = padded_range(points.iter().map(|p| p.0));
    let (y_lo, y_hi) = padded_range(points.iter().map(|p| p.1));
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_px = |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    // SVG y grows downward; data y grows upward.
    let to_py = |y: f64| MARGIN_TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let w = &mut svg;
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )
    .unwrap();
    writeln!(w, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#).unwrap();
    writeln!(
        w,
        r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="15" font-weight="bold">{}</text>"#,
        MARGIN_LEFT,
        escape(title)
    )
    .unwrap();

    // Plot frame and corner range labels.
    writeln!(
        w,
        r##"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#888" stroke-width="1"/>"##
    )
    .unwrap();
    let axis_text = |w: &mut String, x: f64, y: f64, anchor: &str, text: String| {
        writeln!(
            w,
            r##"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="11" fill="#444" text-anchor="{anchor}">{text}</text>"##
        )
        .unwrap();
    };
    axis_text(w, MARGIN_LEFT, HEIGHT - MARGIN_BOTTOM + 16.0, "start", format!("{x_lo:.2}"));
    axis_text(w, WIDTH - MARGIN_RIGHT, HEIGHT - MARGIN_BOTTOM + 16.0, "end", format!("{x_hi:.2}"));
    axis_text(w, MARGIN_LEFT - 6.0, HEIGHT - MARGIN_BOTTOM, "end", format!("{y_lo:.2}"));
    axis_text(w, MARGIN_LEFT - 6.0, MARGIN_TOP + 10.0, "end", format!("{y_hi:.2}"));

    // Markers: exactly one circle per point.
    for (&(x, y), &label) in points.iter().zip(labels) {
        writeln!(
            w,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="{}" fill-opacity="0.85" stroke="#333" stroke-width="0.5"/>"##,
            to_px(x),
            to_py(y),
            PALETTE[label % PALETTE.len()]
        )
        .unwrap();
    }

    // Legend: swatches are rects so the circle count stays the point
    // count.
    let mut seen: Vec<usize> = labels.to_vec();
    seen.sort_unstable();
    seen.dedup();
    for (row, &label) in seen.iter().enumerate() {
        let x = WIDTH - MARGIN_RIGHT + 16.0;
        let y = MARGIN_TOP + 8.0 + row as f64 * 20.0;
        writeln!(
            w,
            r#"<rect x="{x:.2}" y="{y:.2}" width="12" height="12" fill="{}"/>"#,
            PALETTE[label % PALETTE.len()]
        )
        .unwrap();
        let text = match names {
            Some(names) => names[label].clone(),
            None => format!("label {label}"),
        };
        writeln!(
            w,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
            x + 18.0,
            y + 10.0,
            escape(&text)
        )
        .unwrap();
    }

    writeln!(w, "</svg>").unwrap();
    Ok(svg)
}

/// Render and write in one step.
pub fn write_scatter(
    path: &Path,
    points: &[(f64, f64)],
    labels: &[usize],
    names: Option<&[String]>,
    title: &str,
) -> Result<()> {
    let svg = scatter_svg(points, labels, names, title)?;
    fs::write(path, svg).map_err(|e| CliError::io(path, e))
}

/// Data range padded by 5% per side; degenerate or empty input widens
/// to a unit interval so the affine map stays finite.
fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
