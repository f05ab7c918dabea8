//! Static decay plots rendered directly as SVG text.
//!
//! A plot shows the measured points, the fitted curve and a two-standard-
//! deviation band propagated from the fit covariance through the model
//! Jacobian. The optional log mode plots `y - B` (the fitted offset
//! subtracted) on a base-10 log axis, which turns a clean exponential
//! decay into a straight line.

use rbsim_core::fit::FitResult;

use crate::error::{CliError, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 76.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 58.0;
const CURVE_SAMPLES: usize = 160;
const TICKS: usize = 5;

/// Renders the points and the fitted curve with its 2-sigma band.
pub fn render_fit_plot(
    points: &[(f64, f64)],
    fit: &FitResult,
    y_label: &str,
    log_y: bool,
) -> Result<String> {
    if points.is_empty() {
        return Err(CliError::Schema("cannot plot an empty series".into()));
    }
    let offset = if log_y {
        fit.value_of("B").unwrap_or(0.0)
    } else {
        0.0
    };
    let transform = |y: f64| -> Option<f64> {
        let shifted = y - offset;
        if log_y {
            (shifted > 0.0).then(|| shifted.log10())
        } else {
            Some(shifted)
        }
    };

    let xs: Vec<f64> = points.iter().map(|&(m, _)| m).collect();
    let x_min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };

    let dot_points: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|&(m, y)| transform(y).map(|t| (m, t)))
        .collect();
    if log_y && dot_points.is_empty() {
        return Err(CliError::Schema(
            "log scale shows y - B, but no point lies above the fitted offset".into(),
        ));
    }

    // Fitted curve and band on a dense length grid.
    let mut curve = Vec::with_capacity(CURVE_SAMPLES + 1);
    let mut band_low = Vec::with_capacity(CURVE_SAMPLES + 1);
    let mut band_high = Vec::with_capacity(CURVE_SAMPLES + 1);
    for i in 0..=CURVE_SAMPLES {
        let m = x_min + x_span * i as f64 / CURVE_SAMPLES as f64;
        let value = fit.model.predict(&fit.values, m);
        let sigma = prediction_sigma(fit, m);
        if let Some(t) = transform(value) {
            curve.push((m, t));
        }
        if let (Some(low), Some(high)) =
            (transform(value - 2.0 * sigma), transform(value + 2.0 * sigma))
        {
            band_low.push((m, low));
            band_high.push((m, high));
        }
    }

    let mut y_values: Vec<f64> = dot_points.iter().map(|&(_, t)| t).collect();
    y_values.extend(curve.iter().map(|&(_, t)| t));
    y_values.extend(band_low.iter().map(|&(_, t)| t));
    y_values.extend(band_high.iter().map(|&(_, t)| t));
    let mut y_min = y_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut y_max = y_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if y_max - y_min < 1e-12 {
        y_min -= 0.5;
        y_max += 0.5;
    }
    let y_pad = 0.06 * (y_max - y_min);
    let (y_min, y_max) = (y_min - y_pad, y_max + y_pad);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_lo = x_min - 0.04 * x_span;
    let x_hi = x_max + 0.04 * x_span;
    let sx = move |x: f64| MARGIN_LEFT + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = move |y: f64| MARGIN_TOP + (y_max - y) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));

    // Confidence band as a closed polygon: lower edge forward, upper back.
    if band_low.len() > 1 {
        let mut path = String::from("M");
        for &(m, t) in &band_low {
            path.push_str(&format!(" {:.2},{:.2}", sx(m), sy(t)));
        }
        for &(m, t) in band_high.iter().rev() {
            path.push_str(&format!(" L {:.2},{:.2}", sx(m), sy(t)));
        }
        path.push_str(" Z");
        svg.push_str(&format!(
            "  <path d=\"{path}\" fill=\"#7d9fc4\" fill-opacity=\"0.30\" stroke=\"none\"/>\n"
        ));
    }

    if curve.len() > 1 {
        let pts: Vec<String> = curve
            .iter()
            .map(|&(m, t)| format!("{:.2},{:.2}", sx(m), sy(t)))
            .collect();
        svg.push_str(&format!(
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"#1f4e8c\" stroke-width=\"1.5\"/>\n",
            pts.join(" ")
        ));
    }

    for &(m, t) in &dot_points {
        svg.push_str(&format!(
            "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"#b0413e\"/>\n",
            sx(m),
            sy(t)
        ));
    }

    // Axes.
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    svg.push_str(&format!(
        "  <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n"
    ));
    svg.push_str(&format!(
        "  <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    ));
    for i in 0..TICKS {
        let frac = i as f64 / (TICKS - 1) as f64;
        let xv = x_min + frac * x_span;
        let px = sx(xv);
        svg.push_str(&format!(
            "  <line x1=\"{px:.2}\" y1=\"{y0}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            y0 + 5.0
        ));
        svg.push_str(&format!(
            "  <text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>\n",
            y0 + 20.0,
            format_tick(xv)
        ));
        let yv = y_min + frac * (y_max - y_min);
        let py = sy(yv);
        svg.push_str(&format!(
            "  <line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{x0}\" y2=\"{py:.2}\" stroke=\"black\"/>\n",
            x0 - 5.0
        ));
        let label = if log_y {
            format!("{:.2e}", 10f64.powf(yv))
        } else {
            format_tick(yv)
        };
        svg.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{label}</text>\n",
            x0 - 9.0,
            py + 4.0
        ));
    }
    svg.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">sequence length m</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 14.0
    ));
    let axis_label = if log_y {
        format!("{y_label} - B (log)")
    } else {
        y_label.to_string()
    };
    svg.push_str(&format!(
        "  <text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 18 {:.2})\">{axis_label}</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    ));
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Standard deviation of the model prediction at length `m`, from the fit
/// covariance through the Jacobian (the delta method).
fn prediction_sigma(fit: &FitResult, m: f64) -> f64 {
    let jac = fit.model.jacobian_row(&fit.values, m);
    let k = jac.len();
    let mut variance = 0.0;
    for i in 0..k {
        for j in 0..k {
            variance += jac[i] * fit.covariance[(i, j)] * jac[j];
        }
    }
    if variance.is_finite() && variance > 0.0 {
        variance.sqrt()
    } else {
        0.0
    }
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let magnitude = v.abs();
    if !(0.001..10000.0).contains(&magnitude) {
        return format!("{v:.1e}");
    }
    let text = format!("{v:.3}");
    let trimmed = text.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}
