//! Minimal self-contained SVG line charts for sweep curves.

use std::fmt::Write;

use crate::formats::FormatKind;
use crate::montecarlo::{SweepAxis, SweepResult};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 170.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 52.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= target as f64).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

/// Renders series as polylines with markers. Empty series are listed in the
/// legend but draw nothing.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = all.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if all.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 < 1e-12 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let pad = ((y1 - y0) * 0.08).max(0.1);
    y0 -= pad;
    y1 += pad;
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |x: f64| MARGIN_L + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_T + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, MARGIN_L + pw / 2.0, escape(title));
    for t in nice_ticks(x0, x1, 8) {
        let x = sx(t);
        let _ = writeln!(out, r##"<line x1="{x:.2}" y1="{MARGIN_T}" x2="{x:.2}" y2="{:.2}" stroke="#e0e0e0"/>"##, MARGIN_T + ph);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, MARGIN_T + ph + 16.0, fmt_tick(t));
    }
    for t in nice_ticks(y0, y1, 6) {
        let y = sy(t);
        let _ = writeln!(out, r##"<line x1="{MARGIN_L}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#e0e0e0"/>"##, MARGIN_L + pw);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, MARGIN_L - 6.0, y + 4.0, fmt_tick(t));
    }
    let _ = writeln!(out, r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, MARGIN_L + pw / 2.0, HEIGHT - 12.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="16" y="{0:.2}" text-anchor="middle" transform="rotate(-90 16 {0:.2})">{1}</text>"#,
        MARGIN_T + ph / 2.0,
        escape(y_label)
    );
    for (i, s) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = s.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()).map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        if pts.len() > 1 {
            let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
        }
        for p in &pts {
            let (x, y) = p.split_once(',').unwrap_or(("0", "0"));
            let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#);
        }
        let ly = MARGIN_T + 14.0 + 18.0 * i as f64;
        let lx = MARGIN_L + pw + 12.0;
        let _ = writeln!(out, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(out, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&s.label));
    }
    out.push_str("</svg>\n");
    out
}

fn axis_label(axis: SweepAxis) -> &'static str {
    match axis {
        SweepAxis::PowerDbm => "Launch power per channel [dBm]",
        SweepAxis::Spans => "Distance [km]",
    }
}

fn x_of(axis: SweepAxis, p: &crate::montecarlo::SweepPoint) -> f64 {
    match axis {
        SweepAxis::PowerDbm => p.power_dbm,
        SweepAxis::Spans => p.distance_km,
    }
}

/// Q² (dB) curve of a sweep over its unflagged points.
pub fn q2_series(sweep: &SweepResult) -> Series {
    Series {
        label: sweep.format.name(),
        points: sweep.points.iter().filter_map(|p| p.q2_db().map(|q| (x_of(sweep.axis, p), q))).collect(),
    }
}

/// Pointwise Q² difference `a − b` where both sweeps have an unflagged point.
pub fn gain_series(a: &SweepResult, b: &SweepResult) -> Series {
    let points = a
        .points
        .iter()
        .zip(&b.points)
        .filter_map(|(pa, pb)| Some((x_of(a.axis, pa), pa.q2_db()? - pb.q2_db()?)))
        .collect();
    Series { label: format!("{} \u{2212} {}", a.format.name(), b.format.name()), points }
}

pub const GAIN_PAIRS: [(FormatKind, FormatKind); 2] =
    [(FormatKind::Pb5b8d, FormatKind::PdmBpsk), (FormatKind::Pa7b8d, FormatKind::PdmQpsk)];

/// Absolute Q² chart and pairwise gain chart for a set of sweeps on one axis.
pub fn sweep_charts(sweeps: &[SweepResult]) -> (String, String) {
    let axis = sweeps.first().map(|s| s.axis).unwrap_or(SweepAxis::PowerDbm);
    let q2: Vec<Series> = sweeps.iter().map(q2_series).collect();
    let find = |f: FormatKind| sweeps.iter().find(|s| s.format == f);
    let gains: Vec<Series> =
        GAIN_PAIRS.iter().filter_map(|&(a, b)| Some(gain_series(find(a)?, find(b)?))).collect();
    (
        line_chart("Q\u{b2} factor", axis_label(axis), "Q\u{b2} [dB]", &q2),
        line_chart("Q\u{b2} gain", axis_label(axis), "\u{394}Q\u{b2} [dB]", &gains),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_cover_range() {
        let t = nice_ticks(-11.0, -3.0, 8);
        assert_eq!(t.first(), Some(&-11.0));
        assert_eq!(t.last(), Some(&-3.0));
    }

    #[test]
    fn chart_is_well_formed() {
        let s = Series { label: "A & B".into(), points: vec![(0.0, 1.0), (1.0, 2.0), (2.0, f64::NAN)] };
        let svg = line_chart("t", "x", "y", &[s, Series { label: "empty".into(), points: vec![] }]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("A &amp; B"));
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(!svg.contains("NaN"));
    }
}
