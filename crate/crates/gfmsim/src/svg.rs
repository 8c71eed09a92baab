//! Minimal SVG rendering for the quick-look plot and curve plots. The CSV
//! files are the data contract; these renders are inspection aids only.

use std::fmt::Write;

const PANEL_W: f64 = 860.0;
const PANEL_H: f64 = 150.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 15.0;
const MARGIN_V: f64 = 24.0;
const MAX_POINTS: usize = 2400;

struct Panel<'a> {
    label: &'a str,
    x: &'a [f64],
    y: Vec<f64>,
}

fn poly_points(x: &[f64], y: &[f64], y_min: f64, y_max: f64, top: f64) -> String {
    let n = x.len();
    let stride = (n / MAX_POINTS).max(1);
    let x0 = x[0];
    let x1 = x[n - 1];
    let span_x = (x1 - x0).max(1e-12);
    let span_y = (y_max - y_min).max(1e-12);
    let mut out = String::new();
    for k in (0..n).step_by(stride).chain(std::iter::once(n - 1)) {
        let px = MARGIN_L + (x[k] - x0) / span_x * (PANEL_W - MARGIN_L - MARGIN_R);
        let py = top + MARGIN_V + (y_max - y[k]) / span_y * (PANEL_H - 2.0 * MARGIN_V);
        let _ = write!(out, "{px:.1},{py:.1} ");
    }
    out
}

fn render_panels(title: &str, x_label: &str, panels: &[Panel]) -> String {
    let height = PANEL_H * panels.len() as f64 + 30.0;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{PANEL_W}\" height=\"{height}\" \
         font-family=\"monospace\" font-size=\"11\">"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{MARGIN_L}\" y=\"14\" font-size=\"13\">{title}</text>"
    );
    for (i, p) in panels.iter().enumerate() {
        let top = 20.0 + i as f64 * PANEL_H;
        let mut y_min = p.y.iter().copied().fold(f64::INFINITY, f64::min);
        let mut y_max = p.y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(y_min.is_finite() && y_max.is_finite()) {
            y_min = 0.0;
            y_max = 1.0;
        }
        if y_max - y_min < 1e-9 {
            y_min -= 0.5;
            y_max += 0.5;
        }
        let _ = writeln!(
            svg,
            "<rect x=\"{MARGIN_L}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" \
             fill=\"none\" stroke=\"#999\"/>",
            top + MARGIN_V,
            PANEL_W - MARGIN_L - MARGIN_R,
            PANEL_H - 2.0 * MARGIN_V
        );
        let _ = writeln!(
            svg,
            "<text x=\"4\" y=\"{:.1}\">{}</text>",
            top + PANEL_H / 2.0,
            p.label
        );
        let _ = writeln!(
            svg,
            "<text x=\"4\" y=\"{:.1}\" fill=\"#555\">{y_max:.3}</text>",
            top + MARGIN_V + 10.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"4\" y=\"{:.1}\" fill=\"#555\">{y_min:.3}</text>",
            top + PANEL_H - MARGIN_V
        );
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"#1965b0\" stroke-width=\"1.2\" points=\"{}\"/>",
            poly_points(p.x, &p.y, y_min, y_max, top)
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"#555\">{x_label}</text>",
        PANEL_W - 120.0,
        height - 6.0
    );
    svg.push_str("</svg>\n");
    svg
}

/// Four stacked panels: power angle, active power, current magnitude and
/// mode flag against time.
pub fn render_quicklook(trace: &crate::simulator::SimTrace, title: &str) -> String {
    let deg: Vec<f64> = trace.delta.iter().map(|d| d.to_degrees()).collect();
    let mode: Vec<f64> = trace.mode.iter().map(|m| m.as_flag() as f64).collect();
    render_panels(
        title,
        "t [s]",
        &[
            Panel {
                label: "delta [deg]",
                x: &trace.t,
                y: deg,
            },
            Panel {
                label: "p_o [p.u.]",
                x: &trace.t,
                y: trace.p_o.clone(),
            },
            Panel {
                label: "i_omag [p.u.]",
                x: &trace.t,
                y: trace.i_omag.clone(),
            },
            Panel {
                label: "fast mode",
                x: &trace.t,
                y: mode,
            },
        ],
    )
}

/// Single-panel x/y plot for the analysis curves.
pub fn render_curve(title: &str, x_label: &str, y_label: &str, table: &[(f64, f64)]) -> String {
    let x: Vec<f64> = table.iter().map(|p| p.0).collect();
    let y: Vec<f64> = table.iter().map(|p| p.1).collect();
    render_panels(
        title,
        x_label,
        &[Panel {
            label: y_label,
            x: &x,
            y,
        }],
    )
}
