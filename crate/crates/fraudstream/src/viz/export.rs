//! File exports for the density grids: CSV surfaces for external tooling
//! plus a self-contained SVG rendering contour lines and query overlays.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::density::DensityGrid;
use super::VizError;

const SVG_WIDTH: f64 = 800.0;
const SVG_HEIGHT: f64 = 640.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const CONTOUR_LEVELS: usize = 5;
const FRAUD_COLOR: &str = "#c0392b";
const GENUINE_COLOR: &str = "#2980b9";
const OVERLAY_PALETTE: [&str; 8] = [
    "#27ae60", "#8e44ad", "#f39c12", "#16a085", "#d35400", "#2c3e50", "#7f8c8d", "#9b59b6",
];

/// Writes `grid_fraud.csv` / `grid_genuine.csv` (for the classes present),
/// one `overlay_<name>.csv` per named point set, and `figure.svg` drawing
/// class contours with the overlay points on top. Returns the written
/// paths. Output depends only on the inputs, so exports are reproducible
/// byte for byte.
pub fn export_overlay(
    grid: &DensityGrid,
    overlays: &[(String, Vec<(f64, f64)>)],
    out_dir: &Path,
) -> Result<Vec<PathBuf>, VizError> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let classes = [("fraud", grid.fraud()), ("genuine", grid.genuine())];
    let xs = grid.x_centers();
    let ys = grid.y_centers();
    for (name, values) in classes {
        let Some(values) = values else { continue };
        let mut csv = String::from("x,y,density\n");
        for (iy, y) in ys.iter().enumerate() {
            for (ix, x) in xs.iter().enumerate() {
                let _ = writeln!(csv, "{x},{y},{}", values[grid.index(ix, iy)]);
            }
        }
        let path = out_dir.join(format!("grid_{name}.csv"));
        fs::write(&path, csv)?;
        written.push(path);
    }

    for (name, points) in overlays {
        let mut csv = String::from("x,y\n");
        for (x, y) in points {
            let _ = writeln!(csv, "{x},{y}");
        }
        let path = out_dir.join(format!("overlay_{}.csv", sanitize(name)));
        fs::write(&path, csv)?;
        written.push(path);
    }

    let path = out_dir.join("figure.svg");
    fs::write(&path, svg_figure(grid, overlays))?;
    written.push(path);
    Ok(written)
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '[' | ']') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn escape_text(name: &str) -> String {
    name.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Line segments of the `level` iso-contour over a `resolution²` grid of
/// cell-center samples, via marching squares with linear edge
/// interpolation. Saddle squares are disambiguated by the cell average.
pub(crate) fn contour_segments(
    values: &[f64],
    resolution: usize,
    xs: &[f64],
    ys: &[f64],
    level: f64,
) -> Vec<((f64, f64), (f64, f64))> {
    let mut segments = Vec::new();
    let at = |ix: usize, iy: usize| values[iy * resolution + ix];
    let lerp = |a: f64, b: f64, va: f64, vb: f64| a + (level - va) / (vb - va) * (b - a);
    for iy in 0..resolution - 1 {
        for ix in 0..resolution - 1 {
            let (x0, x1) = (xs[ix], xs[ix + 1]);
            let (y0, y1) = (ys[iy], ys[iy + 1]);
            let v00 = at(ix, iy);
            let v10 = at(ix + 1, iy);
            let v01 = at(ix, iy + 1);
            let v11 = at(ix + 1, iy + 1);
            let mask = usize::from(v00 >= level)
                | usize::from(v10 >= level) << 1
                | usize::from(v11 >= level) << 2
                | usize::from(v01 >= level) << 3;
            if mask == 0 || mask == 15 {
                continue;
            }
            let bottom = || (lerp(x0, x1, v00, v10), y0);
            let top = || (lerp(x0, x1, v01, v11), y1);
            let left = || (x0, lerp(y0, y1, v00, v01));
            let right = || (x1, lerp(y0, y1, v10, v11));
            match mask {
                1 => segments.push((left(), bottom())),
                2 => segments.push((bottom(), right())),
                3 => segments.push((left(), right())),
                4 => segments.push((right(), top())),
                5 => {
                    if (v00 + v10 + v01 + v11) / 4.0 >= level {
                        segments.push((left(), top()));
                        segments.push((bottom(), right()));
                    } else {
                        segments.push((left(), bottom()));
                        segments.push((right(), top()));
                    }
                }
                6 => segments.push((bottom(), top())),
                7 => segments.push((left(), top())),
                8 => segments.push((left(), top())),
                9 => segments.push((bottom(), top())),
                10 => {
                    if (v00 + v10 + v01 + v11) / 4.0 >= level {
                        segments.push((left(), bottom()));
                        segments.push((right(), top()));
                    } else {
                        segments.push((left(), top()));
                        segments.push((bottom(), right()));
                    }
                }
                11 => segments.push((right(), top())),
                12 => segments.push((left(), right())),
                13 => segments.push((bottom(), right())),
                14 => segments.push((left(), bottom())),
                _ => unreachable!("mask is 4 bits"),
            }
        }
    }
    segments
}

fn svg_figure(grid: &DensityGrid, overlays: &[(String, Vec<(f64, f64)>)]) -> String {
    let (x_min, x_max, y_min, y_max) = grid.bounds();
    let plot_w = SVG_WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = SVG_HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let py = |y: f64| MARGIN_TOP + (y_max - y) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" viewBox=\"0 0 {SVG_WIDTH} {SVG_HEIGHT}\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" fill=\"white\"/>"
    );
    let _ = writeln!(
        svg,
        "<clipPath id=\"plot\"><rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\"/></clipPath>"
    );

    let xs = grid.x_centers();
    let ys = grid.y_centers();
    let classes = [
        ("fraud", grid.fraud(), FRAUD_COLOR),
        ("genuine", grid.genuine(), GENUINE_COLOR),
    ];
    for (_, values, color) in classes {
        let Some(values) = values else { continue };
        let peak = values.iter().copied().fold(0.0, f64::max);
        for step in 1..=CONTOUR_LEVELS {
            let level = peak * step as f64 / (CONTOUR_LEVELS + 1) as f64;
            let segments = contour_segments(values, grid.resolution(), &xs, &ys, level);
            if segments.is_empty() {
                continue;
            }
            let mut d = String::new();
            for ((ax, ay), (bx, by)) in segments {
                let _ = write!(
                    d,
                    "M{:.2} {:.2}L{:.2} {:.2}",
                    px(ax),
                    py(ay),
                    px(bx),
                    py(by)
                );
            }
            let _ = writeln!(
                svg,
                "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1\" clip-path=\"url(#plot)\"/>"
            );
        }
    }

    for (i, (_, points)) in overlays.iter().enumerate() {
        let color = OVERLAY_PALETTE[i % OVERLAY_PALETTE.len()];
        for &(x, y) in points {
            let _ = writeln!(
                svg,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\" fill-opacity=\"0.8\" clip-path=\"url(#plot)\"/>",
                px(x),
                py(y)
            );
        }
    }

    let _ = writeln!(
        svg,
        "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" fill=\"none\" stroke=\"#333333\"/>"
    );
    let label = |svg: &mut String, x: f64, y: f64, anchor: &str, text: String| {
        let _ = writeln!(
            svg,
            "<text x=\"{x:.2}\" y=\"{y:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"{anchor}\">{text}</text>"
        );
    };
    label(
        &mut svg,
        MARGIN_LEFT,
        SVG_HEIGHT - MARGIN_BOTTOM + 16.0,
        "middle",
        format!("{x_min:.2}"),
    );
    label(
        &mut svg,
        SVG_WIDTH - MARGIN_RIGHT,
        SVG_HEIGHT - MARGIN_BOTTOM + 16.0,
        "middle",
        format!("{x_max:.2}"),
    );
    label(
        &mut svg,
        MARGIN_LEFT - 8.0,
        SVG_HEIGHT - MARGIN_BOTTOM,
        "end",
        format!("{y_min:.2}"),
    );
    label(
        &mut svg,
        MARGIN_LEFT - 8.0,
        MARGIN_TOP + 12.0,
        "end",
        format!("{y_max:.2}"),
    );

    let mut legend_x = MARGIN_LEFT;
    let legend_y = MARGIN_TOP - 14.0;
    for (name, values, color) in classes {
        if values.is_none() {
            continue;
        }
        let _ = writeln!(
            svg,
            "<line x1=\"{legend_x:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\" stroke-width=\"2\"/>",
            legend_y - 4.0,
            legend_x + 18.0,
            legend_y - 4.0
        );
        label(
            &mut svg,
            legend_x + 22.0,
            legend_y,
            "start",
            escape_text(name),
        );
        legend_x += 34.0 + 7.0 * name.len() as f64;
    }
    for (i, (name, _)) in overlays.iter().enumerate() {
        let color = OVERLAY_PALETTE[i % OVERLAY_PALETTE.len()];
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
            legend_x + 6.0,
            legend_y - 4.0
        );
        label(
            &mut svg,
            legend_x + 14.0,
            legend_y,
            "start",
            escape_text(name),
        );
        legend_x += 26.0 + 7.0 * name.len() as f64;
    }

    svg.push_str("</svg>\n");
    svg
}
