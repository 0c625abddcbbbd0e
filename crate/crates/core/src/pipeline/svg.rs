use std::fmt::Write;

use super::{Cell, RejectionMatrix};

const CELL_W: f64 = 44.0;
const CELL_H: f64 = 26.0;
const LABEL_W: f64 = 70.0;
const PANEL_GAP: f64 = 30.0;
const TOP: f64 = 40.0;

fn color(cell: Option<&Cell>) -> &'static str {
    match cell {
        Some(Cell::Rejected { .. }) => "#2c5f8a",
        Some(Cell::Compatible { .. }) => "#f3d36b",
        Some(Cell::Gated { .. }) => "#b8b8b8",
        Some(Cell::Failed { .. }) | None => "#d9534f",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn tooltip(model: &str, invariant: &str, level: f64, cell: Option<&Cell>) -> String {
    let what = match cell {
        Some(c @ (Cell::Rejected { report } | Cell::Compatible { report })) => {
            format!("{} (p_bound = {:.3e}, tau = {:.3e})", c.label(), report.p_bound, report.tau)
        }
        Some(Cell::Gated { reasons }) => format!("gated: {}", reasons.join("; ")),
        Some(Cell::Failed { error }) => format!("failed: {error}"),
        None => "missing".to_string(),
    };
    escape(&format!("data {model}, invariant {invariant}, level {level}: {what}"))
}

/// Heatmap with one panel per generating model: levels across, invariants down.
pub fn heatmap_svg(mx: &RejectionMatrix) -> String {
    let levels = &mx.config.levels;
    let panel_w = LABEL_W + CELL_W * levels.len() as f64;
    let width = mx.models.len() as f64 * (panel_w + PANEL_GAP) + PANEL_GAP;
    let height = TOP + CELL_H * (mx.invariants.len() as f64 + 1.0) + 60.0;
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##).unwrap();
    for (p, model) in mx.models.iter().enumerate() {
        let x0 = PANEL_GAP + p as f64 * (panel_w + PANEL_GAP);
        writeln!(s, r#"<g class="panel" data-model="{}">"#, escape(model)).unwrap();
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-size="13" font-weight="bold">data: {}</text>"#,
            x0 + LABEL_W + CELL_W * levels.len() as f64 / 2.0,
            TOP - 18.0,
            escape(model)
        )
        .unwrap();
        for (r, inv) in mx.invariants.iter().enumerate() {
            let y = TOP + r as f64 * CELL_H;
            writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                x0 + LABEL_W - 6.0,
                y + CELL_H * 0.65,
                escape(inv)
            )
            .unwrap();
            for (c, &level) in levels.iter().enumerate() {
                let cell = mx.cell(model, inv, level);
                let x = x0 + LABEL_W + c as f64 * CELL_W;
                let code = cell.and_then(Cell::code).map_or("", |k| if k == 0 { "0" } else { "1" });
                writeln!(
                    s,
                    r##"<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{}" stroke="#ffffff"><title>{}</title></rect>"##,
                    color(cell),
                    tooltip(model, inv, level, cell)
                )
                .unwrap();
                if !code.is_empty() {
                    let fill = if code == "0" { "#ffffff" } else { "#333333" };
                    writeln!(
                        s,
                        r#"<text x="{}" y="{}" text-anchor="middle" fill="{fill}" pointer-events="none">{code}</text>"#,
                        x + CELL_W / 2.0,
                        y + CELL_H * 0.65
                    )
                    .unwrap();
                }
            }
        }
        let y = TOP + mx.invariants.len() as f64 * CELL_H + 14.0;
        for (c, level) in levels.iter().enumerate() {
            writeln!(
                s,
                r#"<text x="{}" y="{y}" text-anchor="middle">{level}</text>"#,
                x0 + LABEL_W + (c as f64 + 0.5) * CELL_W
            )
            .unwrap();
        }
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">noise level</text>"#,
            x0 + LABEL_W + CELL_W * levels.len() as f64 / 2.0,
            y + 14.0
        )
        .unwrap();
        s.push_str("</g>\n");
    }
    let ly = height - 16.0;
    for (k, (label, fill)) in
        [("0 rejected", "#2c5f8a"), ("1 compatible", "#f3d36b"), ("gated", "#b8b8b8"), ("failed", "#d9534f")]
            .iter()
            .enumerate()
    {
        let x = PANEL_GAP + k as f64 * 110.0;
        writeln!(s, r#"<rect x="{x}" y="{}" width="12" height="12" fill="{fill}"/>"#, ly - 10.0).unwrap();
        writeln!(s, r#"<text x="{}" y="{ly}">{label}</text>"#, x + 16.0).unwrap();
    }
    s.push_str("</svg>\n");
    s
}
