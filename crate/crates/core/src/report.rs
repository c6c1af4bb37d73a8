//! SVG rendering of analysed curves and plain-text result tables.

use std::fmt::Write as _;

use serde::Serialize;

use crate::cogload::{CogLoadModel, EvaluationReport};
use crate::curve::NormalizedCurve;
use crate::metrics::{kinks, significant_reversals, MetricConfig, MetricVector};

#[derive(Debug, Clone, PartialEq)]
pub struct SvgOptions {
    pub width: u32,
    pub height: u32,
    pub kink_markers: bool,
    pub chunk_boundaries: bool,
    pub caption: bool,
    /// Model used for the PCL figure in the caption.
    pub model: CogLoadModel,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            width: 640,
            height: 420,
            kink_markers: true,
            chunk_boundaries: true,
            caption: true,
            model: CogLoadModel::published(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvgReport {
    pub svg: String,
    pub kink_markers: usize,
    pub chunk_boundaries: usize,
}

const MARGIN: f64 = 40.0;
const CAPTION_HEIGHT: f64 = 44.0;

fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
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

/// Draws the curve in a fixed viewport with optional kink markers, chunk
/// boundaries and a metric caption. Output is byte-for-byte deterministic.
pub fn render_svg(
    curve: &NormalizedCurve,
    vector: &MetricVector,
    cfg: &MetricConfig,
    options: &SvgOptions,
) -> SvgReport {
    let w = options.width as f64;
    let h = options.height as f64;
    let caption_h = if options.caption { CAPTION_HEIGHT } else { 0.0 };
    let plot_w = (w - 2.0 * MARGIN).max(1.0);
    let plot_h = (h - 2.0 * MARGIN - caption_h).max(1.0);
    let px = |x: f64| MARGIN + x * plot_w;
    let py = |y: f64| MARGIN + (1.0 - y) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        options.width, options.height, options.width, options.height
    );
    let _ = writeln!(svg, r#"  <title>{}</title>"#, escape_xml(&curve.plot_id));
    let _ = writeln!(
        svg,
        r#"  <rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r##"  <rect x="{MARGIN:.3}" y="{MARGIN:.3}" width="{plot_w:.3}" height="{plot_h:.3}" fill="none" stroke="#999999" stroke-width="1"/>"##
    );

    let mut chunk_boundaries = 0;
    if options.chunk_boundaries {
        let _ = writeln!(svg, r#"  <g class="chunk-boundaries">"#);
        for idx in significant_reversals(curve, cfg.chunk_threshold_eps) {
            let x = px(curve.points[idx].x);
            let _ = writeln!(
                svg,
                r##"    <line x1="{x:.3}" y1="{:.3}" x2="{x:.3}" y2="{:.3}" stroke="#3b7dd8" stroke-dasharray="4 3"/>"##,
                py(1.0),
                py(0.0)
            );
            chunk_boundaries += 1;
        }
        let _ = writeln!(svg, "  </g>");
    }

    let path: Vec<String> = curve
        .points
        .iter()
        .map(|p| format!("{:.3},{:.3}", px(p.x), py(p.y)))
        .collect();
    let _ = writeln!(
        svg,
        r##"  <polyline class="curve" points="{}" fill="none" stroke="#222222" stroke-width="1.5"/>"##,
        path.join(" ")
    );

    let mut kink_markers = 0;
    if options.kink_markers {
        let _ = writeln!(svg, r#"  <g class="kinks">"#);
        for k in kinks(curve) {
            let _ = writeln!(
                svg,
                r##"    <circle cx="{:.3}" cy="{:.3}" r="3.5" fill="#d8433b"/>"##,
                px(k.location.x),
                py(k.location.y)
            );
            kink_markers += 1;
        }
        let _ = writeln!(svg, "  </g>");
    }

    if options.caption {
        let pcl = options
            .model
            .predict_vector(vector)
            .map(|p| format!("{:.2}", p.clamped))
            .unwrap_or_else(|_| "n/a".into());
        let line1 = format!(
            "{}: length {:.3}, degree {}, chunks {}, kinks {}, inv. kink dist. {:.3}",
            vector.plot_id,
            vector.graph_length,
            vector.polynomial_degree,
            vector.visual_chunks,
            vector.num_kinks,
            vector.avg_kink_distance_inv
        );
        let line2 = format!("predicted cognitive load {pcl}");
        let base = h - caption_h + 10.0;
        let _ = writeln!(
            svg,
            r#"  <text x="{MARGIN:.3}" y="{base:.3}" font-family="sans-serif" font-size="12">{}</text>"#,
            escape_xml(&line1)
        );
        let _ = writeln!(
            svg,
            r#"  <text x="{MARGIN:.3}" y="{:.3}" font-family="sans-serif" font-size="12">{}</text>"#,
            base + 16.0,
            escape_xml(&line2)
        );
    }
    svg.push_str("</svg>\n");

    SvgReport {
        svg,
        kink_markers,
        chunk_boundaries,
    }
}

/// Row label in the style of the result tables, e.g. `Log(number of kinks)`.
pub fn model_label(model: &CogLoadModel) -> String {
    let label = model.metric.label();
    if model.log_transformed {
        format!("Log({})", label.to_lowercase())
    } else {
        label.to_owned()
    }
}

fn format_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".to_owned()
    } else {
        format!("{p:.3}")
    }
}

/// Fit statistics with columns Model, R², MAE, MSE, p. Models without fit
/// statistics are skipped.
pub fn fit_table(models: &[CogLoadModel]) -> String {
    let mut out = format!(
        "{:<28} {:>6} {:>6} {:>6} {:>7}\n",
        "Model", "R2", "MAE", "MSE", "p"
    );
    for m in models {
        if let Some(f) = &m.fit {
            let _ = writeln!(
                out,
                "{:<28} {:>6.3} {:>6.3} {:>6.3} {:>7}",
                model_label(m),
                f.r_squared,
                f.mae,
                f.mse,
                format_p(f.p_value)
            );
        }
    }
    out
}

/// Rankings and binary-choice results, one row per score source.
pub fn evaluation_table(rows: &[(String, EvaluationReport)]) -> String {
    let mut out = format!(
        "{:<28} {:>8} {:>7} {:>8} {:>10} {:>9}\n",
        "Model", "Mean rho", "SD rho", "Accuracy", "Error rate", "Tie freq."
    );
    for (name, r) in rows {
        let _ = writeln!(
            out,
            "{:<28} {:>8.3} {:>7.3} {:>8.3} {:>10.3} {:>9.3}",
            name, r.mean_rho, r.sd_rho, r.accuracy, r.error_rate, r.tie_freq
        );
    }
    out
}
