//! Self-contained line plots of a trace.

use std::fmt::Write as _;

use crate::trainer::IterationTrace;

const WIDTH: f64 = 640.0;
const PANEL: f64 = 220.0;
const MARGIN: f64 = 50.0;

/// Two stacked panels, exploitability above diversity, each with its own
/// auto-scaled vertical axis.
pub fn trace_svg(traces: &[IterationTrace]) -> String {
    let height = 2.0 * PANEL + 3.0 * MARGIN;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let iters: Vec<f64> = traces.iter().map(|t| t.iteration as f64).collect();
    let series = [
        ("exploitability", "firebrick", traces.iter().map(|t| t.exploitability).collect::<Vec<_>>()),
        ("diversity", "steelblue", traces.iter().map(|t| t.diversity).collect()),
    ];
    for (k, (name, colour, ys)) in series.iter().enumerate() {
        let top = MARGIN + k as f64 * (PANEL + MARGIN);
        panel(&mut out, top, name, colour, &iters, ys);
    }
    out.push_str("</svg>\n");
    out
}

fn panel(out: &mut String, top: f64, name: &str, colour: &str, xs: &[f64], ys: &[f64]) {
    let left = MARGIN;
    let right = WIDTH - MARGIN / 2.0;
    let bottom = top + PANEL;
    let (x0, x1) = range(xs);
    let (y0, y1) = range(ys);
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * (right - left);
    let sy = |y: f64| bottom - (y - y0) / (y1 - y0) * PANEL;
    let _ = writeln!(
        out,
        r#"<rect x="{left}" y="{top}" width="{}" height="{PANEL}" fill="none" stroke="gray"/>"#,
        right - left
    );
    let _ = writeln!(out, r#"<text x="{left}" y="{}" font-weight="bold">{name}</text>"#, top - 8.0);
    for (y, v) in [(bottom, y0), (top + 10.0, y1)] {
        let _ = writeln!(out, r#"<text x="{}" y="{y}" text-anchor="end">{v:.3}</text>"#, left - 4.0);
    }
    for (x, v) in [(left, x0), (right, x1)] {
        let _ = writeln!(out, r#"<text x="{x}" y="{}" text-anchor="middle">{v}</text>"#, bottom + 14.0);
    }
    let points: Vec<String> = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
        .collect();
    let _ = writeln!(
        out,
        r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
        points.join(" ")
    );
}

/// Finite min and max, widened when degenerate.
fn range(v: &[f64]) -> (f64, f64) {
    let finite = v.iter().copied().filter(|x| x.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, f64::min);
    let hi = finite.fold(f64::NEG_INFINITY, f64::max);
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(i: usize, e: f64, d: f64) -> IterationTrace {
        IterationTrace {
            iteration: i,
            exploitability: e,
            player_exploitability: [e / 2.0, e / 2.0],
            exploitability_is_lower_bound: false,
            diversity: d,
            ed: 0.0,
            population_sizes: [i, i],
            enlarged: None,
            additions: Vec::new(),
            wall_ms: 0,
        }
    }

    #[test]
    fn one_polyline_per_metric() {
        let svg = trace_svg(&[trace(1, 1.0, 0.5), trace(2, 0.5, 0.8), trace(3, 0.0, 1.0)]);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(!svg.contains("NaN"));
        // empty and constant traces still render
        assert!(!trace_svg(&[]).contains("NaN"));
        assert!(!trace_svg(&[trace(1, 0.2, 0.2)]).contains("NaN"));
    }
}
