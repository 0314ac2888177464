//! Static SVG charts of an evaluation.

use std::fmt::Write;

use crate::eval::{EvalReport, InstanceEval, BUCKET_LABELS};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Bars with labels under each; `values` must be non-negative.
fn bar_chart(title: &str, y_label: &str, labels: &[String], values: &[f64]) -> String {
    let mut svg = String::new();
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let top = values.iter().copied().fold(0.0, f64::max).max(1e-12);
    let n = values.len().max(1) as f64;
    let slot = plot_w / n;
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    let base = HEIGHT - MARGIN;
    let _ = writeln!(
        svg,
        r#"<line x1="{MARGIN}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#,
        WIDTH - MARGIN
    );
    let _ = writeln!(svg, r#"<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{base}" stroke="black"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
        MARGIN - 4.0,
        MARGIN + 4.0,
        format_tick(top)
    );
    let show_every = (values.len() / 20).max(1);
    for (i, (label, &v)) in labels.iter().zip(values).enumerate() {
        let h = v / top * plot_h;
        let x = MARGIN + i as f64 * slot + 0.1 * slot;
        let _ = writeln!(
            svg,
            r##"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="#4a78b0"/>"##,
            base - h,
            0.8 * slot
        );
        if i % show_every == 0 {
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#,
                x + 0.4 * slot,
                base + 14.0,
                escape(label)
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn format_tick(v: f64) -> String {
    if v >= 100.0 || v == v.round() {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Instances per gap bucket, plus the all-infeasible count.
pub fn gap_histogram_svg(report: &EvalReport) -> String {
    let mut labels: Vec<String> = BUCKET_LABELS.iter().map(|s| s.to_string()).collect();
    labels.push("infeasible".into());
    let mut values: Vec<f64> = report.histogram.iter().map(|&c| c as f64).collect();
    values.push(report.n_infeasible as f64);
    bar_chart(
        &format!("Suboptimality gap, {}", report.system.name),
        "instances",
        &labels,
        &values,
    )
}

/// Speedup of each instance, in id order.
pub fn speedup_chart_svg(system_name: &str, evals: &[InstanceEval]) -> String {
    let mut sorted: Vec<&InstanceEval> = evals.iter().collect();
    sorted.sort_by_key(|e| e.instance_id);
    let labels: Vec<String> = sorted.iter().map(|e| e.instance_id.to_string()).collect();
    let values: Vec<f64> = sorted.iter().map(|e| e.speedup.max(0.0)).collect();
    bar_chart(&format!("Speedup per instance, {system_name}"), "speedup", &labels, &values)
}
