//! Static SVG line plots of sweep results.
//!
//! The output depends only on the rows and markers passed in, so a given
//! CSV always renders to the same bytes.

use std::fmt::Write;

use sepsim_core::montecarlo::{EstimateRow, Marker};

use crate::error::{CliError, CliResult};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

/// Axis name and value encoded in a row's `param` field.
pub fn axis_value(row: &EstimateRow) -> CliResult<(&str, f64)> {
    let (name, value) = row
        .param
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("row parameter '{}' is not name=value", row.param)))?;
    let value = value
        .parse()
        .map_err(|_| CliError::Usage(format!("row parameter '{}' has a non-numeric value", row.param)))?;
    Ok((name, value))
}

fn tick_label(v: f64) -> String {
    let s = if v.abs() >= 1000.0 || v == v.trunc() {
        format!("{v:.0}")
    } else {
        format!("{v:.3}")
    };
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(rows: &[EstimateRow], markers: &[Marker]) -> CliResult<String> {
    let mut points = Vec::with_capacity(rows.len());
    let mut axis = "";
    for row in rows {
        let (name, x) = axis_value(row)?;
        axis = name;
        points.push((x, row));
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));

    let xs = points.iter().map(|p| p.0).chain(markers.iter().map(|m| m.value));
    let (mut lo, mut hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    } else if hi - lo <= 0.0 {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        (lo, hi) = (lo - pad, hi + pad);
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - lo) / (hi - lo) * plot_w;
    let sy = |y: f64| TOP + (1.0 - y) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);

    // Axes and ticks.
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, sy(0.0), sy(1.0));
    let _ = writeln!(s, r#"<g stroke="black" fill="none">"#);
    let _ = writeln!(s, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x1:.2}" y2="{y0:.2}"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0:.2}" y1="{y0:.2}" x2="{x0:.2}" y2="{y1:.2}"/>"#);
    for k in 0..TICKS {
        let t = k as f64 / (TICKS - 1) as f64;
        let (px, py) = (x0 + t * plot_w, sy(t));
        let _ = writeln!(s, r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}"/>"#, y0 + 5.0);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}"/>"#, x0 - 5.0);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g fill="black">"#);
    for k in 0..TICKS {
        let t = k as f64 / (TICKS - 1) as f64;
        let label = tick_label(lo + t * (hi - lo));
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
            x0 + t * plot_w,
            y0 + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            sy(t) + 4.0,
            tick_label(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 10.0,
        escape(axis)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">success probability</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    let _ = writeln!(s, "</g>");

    // Confidence band, estimate line and points.
    if !points.is_empty() {
        let band: Vec<String> = points
            .iter()
            .map(|(x, r)| format!("{:.2},{:.2}", sx(*x), sy(r.ci_high)))
            .chain(points.iter().rev().map(|(x, r)| format!("{:.2},{:.2}", sx(*x), sy(r.ci_low))))
            .collect();
        let _ = writeln!(
            s,
            r##"<polygon points="{}" fill="#4c72b0" fill-opacity="0.2" stroke="none"/>"##,
            band.join(" ")
        );
        let line: Vec<String> = points
            .iter()
            .map(|(x, r)| format!("{:.2},{:.2}", sx(*x), sy(r.estimate)))
            .collect();
        let _ = writeln!(
            s,
            r##"<polyline points="{}" fill="none" stroke="#4c72b0" stroke-width="2"/>"##,
            line.join(" ")
        );
        let _ = writeln!(s, r##"<g fill="#4c72b0">"##);
        for (x, r) in &points {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3"/>"#, sx(*x), sy(r.estimate));
        }
        let _ = writeln!(s, "</g>");
    }

    // Threshold markers.
    for m in markers {
        let px = sx(m.value);
        let _ = writeln!(
            s,
            r##"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{y1:.2}" stroke="#c44e52" stroke-dasharray="6 4"/>"##
        );
        let _ = writeln!(
            s,
            r##"<text x="{:.2}" y="{:.2}" fill="#c44e52">{}</text>"##,
            px + 4.0,
            y1 + 12.0,
            escape(&m.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
