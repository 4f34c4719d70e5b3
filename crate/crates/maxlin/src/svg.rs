//! Self-contained SVG renderings of grid results: phase-transition heatmaps
//! with the recovery boundary overlaid, and per-sigma noise-sweep line
//! panels. No external assets; one `<rect>` per data cell.

use crate::error::{Error, Result};
use crate::grid::{axis_value, phase_boundary, GridMode, GridRow, Method};
use std::fmt::Write as _;

/// Cell color for failed/unbounded cells (no finite median).
pub const SENTINEL_COLOR: &str = "#9b9b9b";
/// Recovery boundary overlay color.
pub const BOUNDARY_COLOR: &str = "#1faa3e";

const LOG_FLOOR: f64 = -6.0;
const LOG_CEIL: f64 = 1.0;

/// Color for a median error: log10 clipped to [-6, 1] and mapped through a
/// two-stop gradient (every channel monotone in the log error).
fn cell_color(median: f64) -> String {
    if !median.is_finite() {
        return SENTINEL_COLOR.to_string();
    }
    let log = median.max(1e-300).log10().clamp(LOG_FLOOR, LOG_CEIL);
    let t = (log - LOG_FLOOR) / (LOG_CEIL - LOG_FLOOR);
    let lerp = |a: f64, b: f64| (a + t * (b - a)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", lerp(18.0, 245.0), lerp(58.0, 230.0), lerp(66.0, 230.0))
}

fn sorted_unique(values: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut v: Vec<usize> = values.collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Phase-transition heatmap for one method: columns are the varying
/// dimension, rows are sample sizes (largest on top), the green polyline
/// traces the per-column recovery boundary at `threshold`.
pub fn render_heatmap(rows: &[GridRow], method: Method, threshold: f64) -> Result<String> {
    let cells: Vec<&GridRow> = rows.iter().filter(|r| r.method == method).collect();
    let Some(first) = cells.first() else {
        return Err(Error::invalid("empty grid"));
    };
    let mode = first.mode;
    if mode == GridMode::NoiseSweep {
        return Err(Error::invalid("heatmaps apply to phase-grid modes"));
    }
    if cells.iter().any(|r| r.mode != mode) {
        return Err(Error::invalid("mixed grid modes"));
    }

    let axes = sorted_unique(cells.iter().map(|r| axis_value(mode, r)));
    let ns = sorted_unique(cells.iter().map(|r| r.n));
    let axis_pos = |v: usize| axes.iter().position(|&a| a == v).unwrap();
    let n_pos = |v: usize| ns.iter().position(|&a| a == v).unwrap();

    let (ml, mt, mr, mb) = (70.0, 42.0, 30.0, 58.0);
    let (cw, ch) = (46.0, 30.0);
    let plot_w = cw * axes.len() as f64;
    let plot_h = ch * ns.len() as f64;
    let width = ml + plot_w + mr;
    let height = mt + plot_h + mb;
    let cell_x = |axis: usize| ml + cw * axis_pos(axis) as f64;
    // Largest n at the top.
    let cell_y = |n: usize| mt + ch * (ns.len() - 1 - n_pos(n)) as f64;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"11\">"
    );
    let axis_name = match mode {
        GridMode::FixKVaryP => "p",
        GridMode::FixPVaryK => "k",
        GridMode::NoiseSweep => unreachable!(),
    };
    let fixed_label = match mode {
        GridMode::FixKVaryP => format!("k = {}", first.k),
        GridMode::FixPVaryK => format!("p = {}", first.p),
        GridMode::NoiseSweep => unreachable!(),
    };
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\">{} median log10 error, {}, sigma = {}</text>",
        width / 2.0,
        method.as_str(),
        fixed_label,
        first.sigma
    );

    for r in &cells {
        let x = cell_x(axis_value(mode, r));
        let y = cell_y(r.n);
        let _ = writeln!(
            svg,
            "<rect x=\"{x}\" y=\"{y}\" width=\"{cw}\" height=\"{ch}\" fill=\"{}\"/>",
            cell_color(r.median_error)
        );
    }

    // Axes and tick labels.
    let x0 = ml;
    let y0 = mt + plot_h;
    let _ = write!(
        svg,
        "<line x1=\"{x0}\" y1=\"{mt}\" x2=\"{x0}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" stroke=\"black\"/>\n",
        ml + plot_w
    );
    for &a in &axes {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{a}</text>",
            cell_x(a) + cw / 2.0,
            y0 + 16.0
        );
    }
    for &n in &ns {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{n}</text>",
            x0 - 6.0,
            cell_y(n) + ch / 2.0 + 4.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{axis_name}</text>",
        ml + plot_w / 2.0,
        height - 22.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">n</text>",
        mt + plot_h / 2.0,
        mt + plot_h / 2.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\">color: log10 median in [{LOG_FLOOR}, {LOG_CEIL}]; grey = no finite median</text>",
        ml,
        height - 6.0
    );

    // Recovery boundary.
    let boundary = phase_boundary(rows, method, threshold)?;
    let points: Vec<String> = boundary
        .iter()
        .filter_map(|&(axis, b)| {
            b.map(|n| {
                format!(
                    "{},{}",
                    cell_x(axis) + cw / 2.0,
                    cell_y(n) + ch / 2.0
                )
            })
        })
        .collect();
    if points.len() == 1 {
        // A single recovered column: mark it with a short segment.
        let (axis, n) = boundary
            .iter()
            .find_map(|&(a, b)| b.map(|n| (a, n)))
            .unwrap();
        let y = cell_y(n) + ch / 2.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{BOUNDARY_COLOR}\" stroke-width=\"2.5\"/>",
            cell_x(axis) + 4.0,
            cell_x(axis) + cw - 4.0
        );
    } else if points.len() > 1 {
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{BOUNDARY_COLOR}\" stroke-width=\"2.5\"/>",
            points.join(" ")
        );
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Noise-sweep line plot: one panel per sigma, log10 median error against
/// the sample size, solid line for the convex estimator and dotted for the
/// partition baseline.
pub fn render_noise_sweep(rows: &[GridRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::invalid("empty grid"));
    }
    if rows.iter().any(|r| r.mode != GridMode::NoiseSweep) {
        return Err(Error::invalid("noise-sweep plot requires noise_sweep rows"));
    }
    let mut sigmas: Vec<f64> = rows.iter().map(|r| r.sigma).collect();
    sigmas.sort_by(f64::total_cmp);
    sigmas.dedup();
    let ns = sorted_unique(rows.iter().map(|r| r.n));
    if ns.len() < 2 {
        return Err(Error::invalid("noise sweep needs at least two sample sizes"));
    }
    let n_min = *ns.first().unwrap() as f64;
    let n_max = *ns.last().unwrap() as f64;

    let (panel_w, panel_h) = (240.0, 180.0);
    let (ml, mt, gap, mb) = (60.0, 46.0, 34.0, 50.0);
    let width = ml + sigmas.len() as f64 * (panel_w + gap);
    let height = mt + panel_h + mb;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\" font-family=\"sans-serif\" font-size=\"11\">"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\">median log10 error vs n (k = {}, p = {}); solid = ce, dotted = lspa</text>",
        width / 2.0,
        rows[0].k,
        rows[0].p
    );

    for (si, &sigma) in sigmas.iter().enumerate() {
        let px0 = ml + si as f64 * (panel_w + gap);
        let py0 = mt;
        let x_of = |n: usize| px0 + (n as f64 - n_min) / (n_max - n_min) * panel_w;
        let y_of = |median: f64| {
            let log = if median.is_finite() {
                median.max(1e-300).log10().clamp(LOG_FLOOR, LOG_CEIL)
            } else {
                LOG_CEIL
            };
            py0 + (LOG_CEIL - log) / (LOG_CEIL - LOG_FLOOR) * panel_h
        };

        let _ = writeln!(
            svg,
            "<rect x=\"{px0}\" y=\"{py0}\" width=\"{panel_w}\" height=\"{panel_h}\" \
             fill=\"none\" stroke=\"black\"/>"
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">sigma = {sigma}</text>",
            px0 + panel_w / 2.0,
            py0 - 8.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">n</text>",
            px0 + panel_w / 2.0,
            py0 + panel_h + 30.0
        );
        for &n in [ns.first().unwrap(), ns.last().unwrap()].iter() {
            let _ = writeln!(
                svg,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{n}</text>",
                x_of(*n),
                py0 + panel_h + 14.0
            );
        }
        if si == 0 {
            for log in [-6i32, -3, 0] {
                let _ = writeln!(
                    svg,
                    "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">1e{log}</text>",
                    px0 - 6.0,
                    y_of(10f64.powi(log)) + 4.0
                );
            }
        }

        for method in [Method::Ce, Method::Lspa] {
            let mut series: Vec<(usize, f64)> = rows
                .iter()
                .filter(|r| r.method == method && r.sigma == sigma)
                .map(|r| (r.n, r.median_error))
                .collect();
            if series.is_empty() {
                continue;
            }
            series.sort_by_key(|&(n, _)| n);
            let points: Vec<String> = series
                .iter()
                .map(|&(n, m)| format!("{},{}", x_of(n), y_of(m)))
                .collect();
            let (color, dash) = match method {
                Method::Ce => ("#1f6feb", ""),
                Method::Lspa => ("#d1242f", " stroke-dasharray=\"5 4\""),
            };
            let _ = writeln!(
                svg,
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"{dash}/>",
                points.join(" ")
            );
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(p: usize, n: usize, median: f64) -> GridRow {
        GridRow {
            mode: GridMode::FixKVaryP,
            k: 2,
            p,
            n,
            sigma: 0.0,
            method: Method::Ce,
            trials: 5,
            median_error: median,
            finite_trials: if median.is_finite() { 5 } else { 0 },
        }
    }

    #[test]
    fn heatmap_has_one_rect_per_cell_plus_axes() {
        let rows = vec![
            row(4, 100, 1e-7),
            row(4, 200, 1e-8),
            row(8, 100, 0.5),
            row(8, 200, 1e-8),
        ];
        let svg = render_heatmap(&rows, Method::Ce, 1e-5).unwrap();
        assert_eq!(svg.matches("<rect").count(), 4);
        assert!(svg.matches("<line").count() >= 2);
        assert!(svg.contains("<polyline"));
        assert!(svg.contains("</svg>"));
    }

    #[test]
    fn all_sentinel_grid_uses_reserved_color_and_no_boundary() {
        let rows = vec![
            row(4, 100, f64::INFINITY),
            row(4, 200, f64::INFINITY),
            row(8, 100, f64::INFINITY),
            row(8, 200, f64::INFINITY),
        ];
        let svg = render_heatmap(&rows, Method::Ce, 1e-5).unwrap();
        assert_eq!(svg.matches(SENTINEL_COLOR).count(), 4);
        assert!(!svg.contains("<polyline"));
        assert!(!svg.contains(BOUNDARY_COLOR));
    }

    #[test]
    fn colors_are_monotone_in_log_error() {
        let medians = [1e-7, 1e-5, 1e-3, 1e-1, 1.0, 10.0];
        let mut reds = Vec::new();
        for &m in &medians {
            let c = cell_color(m);
            reds.push(u8::from_str_radix(&c[1..3], 16).unwrap());
        }
        for pair in reds.windows(2) {
            assert!(pair[0] <= pair[1], "{reds:?}");
        }
        // Clipping saturates at the ends.
        assert_eq!(cell_color(1e-9), cell_color(1e-6));
        assert_eq!(cell_color(100.0), cell_color(10.0));
    }

    #[test]
    fn noise_sweep_panels_and_styles() {
        let mut rows = Vec::new();
        for &sigma in &[0.05, 0.1] {
            for &n in &[50usize, 100, 200] {
                for method in [Method::Ce, Method::Lspa] {
                    rows.push(GridRow {
                        mode: GridMode::NoiseSweep,
                        k: 2,
                        p: 3,
                        n,
                        sigma,
                        method,
                        trials: 5,
                        median_error: 0.1 / n as f64,
                        finite_trials: 5,
                    });
                }
            }
        }
        let svg = render_noise_sweep(&rows).unwrap();
        assert_eq!(svg.matches("sigma =").count(), 2);
        assert_eq!(svg.matches("<polyline").count(), 4);
        assert_eq!(svg.matches("stroke-dasharray").count(), 2);

        let phase_rows = vec![row(4, 100, 0.5)];
        assert!(render_noise_sweep(&phase_rows).is_err());
        assert!(render_heatmap(&[], Method::Ce, 1e-5).is_err());
    }
}
