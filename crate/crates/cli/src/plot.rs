//! SVG plot of the iterate envelopes `α_n(t)`, `β_n(t)`.
//!
//! Draws only from a finished trace, so plotting never touches the numerics.

use std::fmt::Write as _;

use dbvp_core::monotone::IterationTrace;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 56.0;
/// Upper bound on drawn iterates per sequence; long traces are thinned evenly.
pub const MAX_CURVES: usize = 40;

/// Indices `0..len` thinned to at most `max` entries, always keeping both ends.
fn thinned(len: usize, max: usize) -> Vec<usize> {
    if len <= max {
        return (0..len).collect();
    }
    let mut idx: Vec<usize> = (0..max).map(|k| k * (len - 1) / (max - 1)).collect();
    idx.dedup();
    idx
}

fn polyline(out: &mut String, points: impl Iterator<Item = (f64, f64)>, color: &str, width: f64, opacity: f64) {
    let coords: Vec<String> = points.map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="{color}" stroke-width="{width}" stroke-opacity="{opacity}" points="{}"/>"#,
        coords.join(" ")
    );
}

/// Renders the envelopes as a standalone SVG document.
pub fn envelope_svg(trace: &IterationTrace, title: &str) -> String {
    let first = &trace.iterates[0];
    let n = first.alpha.values().len();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for rec in &trace.iterates {
        for &v in rec.alpha.values().iter().chain(rec.beta.values()) {
            if v.is_finite() {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    if !(hi > lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    let t_max = (n - 1) as f64;
    let x = |t: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * t as f64 / t_max;
    let y = |v: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * (v - lo) / (hi - lo);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );

    // axes and ticks
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, HEIGHT - MARGIN, MARGIN);
    let _ = writeln!(
        out,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#
    );
    let step = ((n - 1) / 10).max(1);
    for t in (0..n).step_by(step) {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" text-anchor="middle">{t}</text>"#,
            x(t),
            y0 + 16.0
        );
    }
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.3e}</text>"#,
            x0 - 4.0,
            y(v) + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">t</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0
    );

    let picks = thinned(trace.iterates.len(), MAX_CURVES);
    let last = *picks.last().expect("trace has the initial pair");
    for &i in &picks {
        let rec = &trace.iterates[i];
        let (width, opacity) = if i == last { (2.0, 1.0) } else { (1.0, 0.35) };
        polyline(&mut out, (0..n).map(|t| (x(t), y(rec.alpha[t]))), "#1f60c4", width, opacity);
        polyline(&mut out, (0..n).map(|t| (x(t), y(rec.beta[t]))), "#c4321f", width, opacity);
    }
    let _ = writeln!(
        out,
        r##"<text x="{}" y="{}" fill="#1f60c4">α_n (lower)</text><text x="{}" y="{}" fill="#c4321f">β_n (upper)</text>"##,
        x1 - 150.0,
        y1 + 4.0,
        x1 - 150.0,
        y1 + 20.0
    );
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
