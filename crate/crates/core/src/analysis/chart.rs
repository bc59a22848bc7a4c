//! Dual-axis SVG line charts. Output bytes depend only on the input.

use std::fmt::Write as _;
use std::path::Path;

use chrono::NaiveDate;

use super::AnalysisError;
use crate::ingest::DATE_FORMAT;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 80.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Left,
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartSeries {
    pub label: String,
    pub axis: Axis,
    pub points: Vec<(NaiveDate, f64)>,
}

impl ChartSeries {
    pub fn new(label: impl Into<String>, axis: Axis, points: Vec<(NaiveDate, f64)>) -> Self {
        Self {
            label: label.into(),
            axis,
            points,
        }
    }
}

fn escape(s: &str) -> String {
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

fn value_range(series: &[&ChartSeries]) -> Option<(f64, f64)> {
    let vals = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).filter(|v| v.is_finite());
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if lo > hi {
        return None;
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { lo.abs().max(1.0) * 0.5 };
    Some((lo - pad, hi + pad))
}

fn tick_label(v: f64, span: f64) -> String {
    let decimals = (2.0 - span.log10().floor()).clamp(0.0, 6.0) as usize;
    let s = format!("{v:.decimals$}");
    // avoid "-0.00"
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

/// Renders series against a shared date axis. Left-axis series share one
/// value scale and right-axis series another.
pub fn render_chart(title: &str, series: &[ChartSeries]) -> Result<String, AnalysisError> {
    let non_empty: Vec<&ChartSeries> = series.iter().filter(|s| !s.points.is_empty()).collect();
    if non_empty.is_empty() {
        return Err(AnalysisError::EmptyChart);
    }
    let first = non_empty.iter().filter_map(|s| s.points.iter().map(|p| p.0).min()).min().unwrap();
    let last = non_empty.iter().filter_map(|s| s.points.iter().map(|p| p.0).max()).max().unwrap();
    let span_days = (last - first).num_days() as f64;
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let x_of = |d: NaiveDate| {
        if span_days == 0.0 {
            (x0 + x1) / 2.0
        } else {
            x0 + (d - first).num_days() as f64 / span_days * (x1 - x0)
        }
    };
    let on = |axis| non_empty.iter().copied().filter(|s| s.axis == axis).collect::<Vec<_>>();
    let ranges = [(Axis::Left, value_range(&on(Axis::Left))), (Axis::Right, value_range(&on(Axis::Right)))];
    let y_of = |axis: Axis, v: f64| {
        let (lo, hi) = ranges.iter().find(|r| r.0 == axis).unwrap().1.unwrap();
        y1 - (v - lo) / (hi - lo) * (y1 - y0)
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#333"/>"##,
        x1 - x0,
        y1 - y0
    );

    for i in 0..TICKS {
        let frac = i as f64 / (TICKS - 1) as f64;
        let day = first + chrono::Days::new((span_days * frac).round() as u64);
        let x = x_of(day);
        let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{y1:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/>"##, y1 + 5.0);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            y1 + 18.0,
            day.format(DATE_FORMAT)
        );
    }

    for (axis, range) in ranges {
        let Some((lo, hi)) = range else { continue };
        let (x, dir, anchor) = match axis {
            Axis::Left => (x0, -1.0, "end"),
            Axis::Right => (x1, 1.0, "start"),
        };
        for i in 0..TICKS {
            let v = lo + (hi - lo) * i as f64 / (TICKS - 1) as f64;
            let y = y_of(axis, v);
            let _ = writeln!(svg, r##"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#333"/>"##, x + 5.0 * dir);
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}">{}</text>"#,
                x + 8.0 * dir,
                y + 4.0,
                tick_label(v, hi - lo)
            );
        }
        let names: Vec<String> = on(axis).iter().map(|s| escape(&s.label)).collect();
        let (tx, rot) = match axis {
            Axis::Left => (18.0, -90),
            Axis::Right => (WIDTH - 18.0, 90),
        };
        let ty = (y0 + y1) / 2.0;
        let _ = writeln!(
            svg,
            r#"<text x="{tx:.2}" y="{ty:.2}" text-anchor="middle" transform="rotate({rot} {tx:.2} {ty:.2})">{}</text>"#,
            names.join(", ")
        );
    }

    for (i, s) in non_empty.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|&(d, v)| format!("{:.2},{:.2}", x_of(d), y_of(s.axis, v)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = y0 + 14.0 + 16.0 * i as f64;
        let lx = x0 + 10.0;
        let _ = writeln!(svg, r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let side = match s.axis {
            Axis::Left => "left",
            Axis::Right => "right",
        };
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{} ({side})</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn plot_chart(title: &str, series: &[ChartSeries], path: impl AsRef<Path>) -> Result<(), AnalysisError> {
    let svg = render_chart(title, series)?;
    let path = path.as_ref();
    std::fs::write(path, svg).map_err(|source| AnalysisError::Io {
        path: path.to_path_buf(),
        source,
    })
}
