//! Static SVG of an empirical stopping-time CDF against the tail bound.

use std::fmt::Write;

use sarc_core::analysis::BoundComparison;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 50.0;

/// Render with `t + 1` on a log axis; the bound is drawn only where it applies.
pub fn cdf_vs_bound(rows: &[BoundComparison], title: &str) -> String {
    let t_max = rows.iter().map(|r| r.t + 1).max().unwrap_or(1).max(2) as f64;
    let x = |t: usize| MARGIN + (WIDTH - 2.0 * MARGIN) * ((t + 1) as f64).ln() / t_max.ln();
    let y = |p: f64| HEIGHT - MARGIN - (HEIGHT - 2.0 * MARGIN) * p.clamp(0.0, 1.0);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (MARGIN, WIDTH - MARGIN, y(0.0), y(1.0));
    let _ = writeln!(
        out,
        r#"<path d="M{x0:.1},{y1:.1} L{x0:.1},{y0:.1} L{x1:.1},{y0:.1}" stroke="black" fill="none"/>"#
    );
    for p in [0.0, 0.5, 1.0] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="11">{p}</text>"#,
            x0 - 6.0,
            y(p) + 4.0
        );
    }
    let mut decade = 1.0;
    while decade <= t_max {
        let px = MARGIN + (WIDTH - 2.0 * MARGIN) * decade.ln() / t_max.ln();
        let _ = writeln!(
            out,
            r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="11">{decade:e}</text>"#,
            y0 + 16.0
        );
        decade *= 10.0;
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="12">t + 1</text>"#,
        WIDTH / 2.0,
        HEIGHT - 10.0
    );

    let empirical: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.2},{:.2}", x(r.t), y(r.empirical)))
        .collect();
    if !empirical.is_empty() {
        let _ = writeln!(
            out,
            r#"<polyline points="{}" stroke="steelblue" stroke-width="2" fill="none"/>"#,
            empirical.join(" ")
        );
    }
    let bound: Vec<String> = rows
        .iter()
        .filter_map(|r| r.bound.map(|b| format!("{:.2},{:.2}", x(r.t), y(b))))
        .collect();
    if !bound.is_empty() {
        let _ = writeln!(
            out,
            r#"<polyline points="{}" stroke="firebrick" stroke-width="2" stroke-dasharray="6,4" fill="none"/>"#,
            bound.join(" ")
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" fill="steelblue">empirical P(T &lt;= t+1)</text>"#,
        x1 - 170.0,
        y1 + 60.0
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" fill="firebrick">tail bound</text>"#,
        x1 - 170.0,
        y1 + 76.0
    );
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: usize, empirical: f64, bound: Option<f64>) -> BoundComparison {
        BoundComparison {
            t,
            empirical,
            bound,
            margin: 0.0,
            consistent: true,
        }
    }

    #[test]
    fn draws_bound_only_where_applicable() {
        let svg = cdf_vs_bound(&[row(0, 0.0, None), row(9, 0.5, Some(0.2)), row(99, 1.0, Some(0.9))], "a<b");
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a&lt;b"));
    }

    #[test]
    fn empty_rows() {
        let svg = cdf_vs_bound(&[], "empty");
        assert_eq!(svg.matches("<polyline").count(), 0);
    }
}
