//! Direct SVG emission: divergence-curve panels with axes, labels and the
//! fitted line, singly or arranged in a (β row, Γ column) grid.
//!
//! No plotting dependency; the output is plain polylines sized for
//! standalone viewing.

use std::fmt::Write;

use crate::lyap::{DivergenceCurve, LyapunovEstimate};

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 260.0;
const MARGIN_L: f64 = 52.0;
const MARGIN_R: f64 = 12.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 40.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b",
];

/// One sweep case: its divergence curves plus the headline numbers for the
/// panel title.
#[derive(Debug, Clone)]
pub struct CasePanel {
    pub gamma: f64,
    pub beta: f64,
    pub lambda: Option<f64>,
    pub curves: Vec<DivergenceCurve>,
    pub status: String,
}

/// Data-to-pixel mapping for one panel placed at (x0, y0).
struct Frame {
    x0: f64,
    y0: f64,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

impl Frame {
    fn plot_w() -> f64 {
        PANEL_W - MARGIN_L - MARGIN_R
    }

    fn plot_h() -> f64 {
        PANEL_H - MARGIN_T - MARGIN_B
    }

    fn px(&self, x: f64) -> f64 {
        let span = (self.xmax - self.xmin).max(f64::MIN_POSITIVE);
        self.x0 + MARGIN_L + (x - self.xmin) / span * Self::plot_w()
    }

    fn py(&self, y: f64) -> f64 {
        let span = (self.ymax - self.ymin).max(f64::MIN_POSITIVE);
        self.y0 + MARGIN_T + Self::plot_h() - (y - self.ymin) / span * Self::plot_h()
    }
}

fn data_bounds(curves: &[DivergenceCurve]) -> Option<(f64, f64, f64, f64)> {
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for curve in curves {
        for (h, &s) in curve.s_values.iter().enumerate() {
            if !s.is_finite() {
                continue;
            }
            xmax = xmax.max(h as f64 * curve.dt);
            ymin = ymin.min(s);
            ymax = ymax.max(s);
        }
    }
    if !(xmax.is_finite() && ymin.is_finite() && ymax.is_finite()) {
        return None;
    }
    if ymax - ymin < 1e-12 {
        ymax += 0.5;
        ymin -= 0.5;
    }
    let pad = 0.05 * (ymax - ymin);
    Some((0.0, xmax.max(f64::MIN_POSITIVE), ymin - pad, ymax + pad))
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (0.01..10_000.0).contains(&a) {
        format!("{v:.2}")
    } else {
        format!("{v:.1e}")
    }
}

/// Axes box, min/max tick labels and axis titles for one frame.
fn render_axes(out: &mut String, f: &Frame, title: &str) {
    let left = f.x0 + MARGIN_L;
    let top = f.y0 + MARGIN_T;
    let right = left + Frame::plot_w();
    let bottom = top + Frame::plot_h();
    let _ = writeln!(
        out,
        r##"<rect x="{left:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="#444" stroke-width="1"/>"##,
        Frame::plot_w(),
        Frame::plot_h()
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle" font-family="sans-serif">{}</text>"#,
        f.x0 + PANEL_W / 2.0,
        f.y0 + 18.0,
        xml_escape(title)
    );
    // Tick labels at the corners of the data range.
    let _ = writeln!(
        out,
        r#"<text x="{left:.1}" y="{:.1}" font-size="10" text-anchor="start" font-family="sans-serif">{}</text>"#,
        bottom + 14.0,
        fmt_tick(f.xmin)
    );
    let _ = writeln!(
        out,
        r#"<text x="{right:.1}" y="{:.1}" font-size="10" text-anchor="end" font-family="sans-serif">{}</text>"#,
        bottom + 14.0,
        fmt_tick(f.xmax)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end" font-family="sans-serif">{}</text>"#,
        left - 4.0,
        bottom,
        fmt_tick(f.ymin)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end" font-family="sans-serif">{}</text>"#,
        left - 4.0,
        top + 10.0,
        fmt_tick(f.ymax)
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle" font-family="sans-serif">t</text>"#,
        (left + right) / 2.0,
        bottom + 28.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 {:.1} {:.1})">S</text>"#,
        f.x0 + 14.0,
        (top + bottom) / 2.0,
        f.x0 + 14.0,
        (top + bottom) / 2.0
    );
}

fn render_curves(out: &mut String, f: &Frame, curves: &[DivergenceCurve]) {
    for (i, curve) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut points = String::new();
        for (h, &s) in curve.s_values.iter().enumerate() {
            if !s.is_finite() {
                continue;
            }
            let _ = write!(
                points,
                "{:.1},{:.1} ",
                f.px(h as f64 * curve.dt),
                f.py(s)
            );
        }
        if !points.is_empty() {
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1"/>"#,
                points.trim_end()
            );
        }
    }
}

/// The fitted line, anchored to the mean curve value at the start of the
/// fit window and drawn with the estimated slope across that window.
fn render_fit(out: &mut String, f: &Frame, curves: &[DivergenceCurve], est: &LyapunovEstimate) {
    let len = curves.iter().map(|c| c.s_values.len()).min().unwrap_or(0);
    if est.fit_from >= len || est.fit_to >= len || curves.is_empty() {
        return;
    }
    let dt = curves[0].dt;
    let mean_at = |h: usize| -> f64 {
        curves.iter().map(|c| c.s_values[h]).sum::<f64>() / curves.len() as f64
    };
    let t_from = est.fit_from as f64 * dt;
    let t_to = est.fit_to as f64 * dt;
    let s_from = mean_at(est.fit_from);
    let s_to = s_from + est.lambda * (t_to - t_from);
    let _ = writeln!(
        out,
        r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#000" stroke-width="2" stroke-dasharray="6 3"/>"##,
        f.px(t_from),
        f.py(s_from),
        f.px(t_to),
        f.py(s_to)
    );
}

fn render_panel(
    out: &mut String,
    x0: f64,
    y0: f64,
    title: &str,
    curves: &[DivergenceCurve],
    est: Option<&LyapunovEstimate>,
    note: Option<&str>,
) {
    match data_bounds(curves) {
        Some((xmin, xmax, ymin, ymax)) => {
            let frame = Frame {
                x0,
                y0,
                xmin,
                xmax,
                ymin,
                ymax,
            };
            render_axes(out, &frame, title);
            render_curves(out, &frame, curves);
            if let Some(est) = est {
                render_fit(out, &frame, curves, est);
            }
        }
        None => {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle" font-family="sans-serif">{}</text>"#,
                x0 + PANEL_W / 2.0,
                y0 + PANEL_H / 2.0,
                xml_escape(note.unwrap_or("no data"))
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle" font-family="sans-serif">{}</text>"#,
                x0 + PANEL_W / 2.0,
                y0 + 18.0,
                xml_escape(title)
            );
        }
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn svg_open(width: f64, height: f64) -> String {
    format!(
        concat!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" "#,
            r#"viewBox="0 0 {w:.0} {h:.0}">"#,
            "\n",
            r##"<rect width="{w:.0}" height="{h:.0}" fill="#fff"/>"##,
            "\n"
        ),
        w = width,
        h = height
    )
}

/// Single panel: every divergence curve plus the fitted line.
pub fn lyap_panel(
    curves: &[DivergenceCurve],
    est: Option<&LyapunovEstimate>,
    title: &str,
) -> String {
    let mut out = svg_open(PANEL_W, PANEL_H);
    let title = match est {
        Some(e) => format!("{title}: lambda = {:.4}, r2 = {:.3}", e.lambda, e.r_squared),
        None => format!("{title}: no linear region"),
    };
    render_panel(&mut out, 0.0, 0.0, &title, curves, est, None);
    out.push_str("</svg>\n");
    out
}

/// Sweep figure: one divergence panel per case, rows = β, columns = Γ when
/// the cases form a full grid, otherwise wrapped two per row.
pub fn sweep_grid(panels: &[CasePanel]) -> String {
    let mut gammas: Vec<f64> = panels.iter().map(|p| p.gamma).collect();
    let mut betas: Vec<f64> = panels.iter().map(|p| p.beta).collect();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();
    betas.sort_by(f64::total_cmp);
    betas.dedup();

    let full_grid = gammas.len() * betas.len() == panels.len();
    let (cols, rows) = if full_grid {
        (gammas.len(), betas.len())
    } else {
        let cols = panels.len().min(2).max(1);
        (cols, panels.len().div_ceil(cols))
    };

    let mut out = svg_open(cols as f64 * PANEL_W, rows as f64 * PANEL_H);
    for (i, panel) in panels.iter().enumerate() {
        let (row, col) = if full_grid {
            (
                betas.iter().position(|&b| b == panel.beta).unwrap(),
                gammas.iter().position(|&g| g == panel.gamma).unwrap(),
            )
        } else {
            (i / cols, i % cols)
        };
        let title = match panel.lambda {
            Some(l) => format!(
                "Gamma = {}, beta = {}: lambda = {l:.4}",
                panel.gamma, panel.beta
            ),
            None => format!("Gamma = {}, beta = {}", panel.gamma, panel.beta),
        };
        let note = if panel.status == "ok" {
            "no data".to_string()
        } else {
            panel.status.clone()
        };
        render_panel(
            &mut out,
            col as f64 * PANEL_W,
            row as f64 * PANEL_H,
            &title,
            &panel.curves,
            None,
            Some(&note),
        );
    }
    out.push_str("</svg>\n");
    out
}
