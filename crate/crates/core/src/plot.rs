//! Minimal SVG scatter plots: points, axes, tick labels and titles.

use std::fmt::Write;

use crate::explain::ScatterSeries;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;

#[derive(Debug, Clone, Copy)]
struct Range {
    lo: f64,
    hi: f64,
}

impl Range {
    fn of(values: impl Iterator<Item = f64>) -> Range {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo > hi {
            return Range { lo: 0.0, hi: 1.0 };
        }
        let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
        Range {
            lo: lo - pad,
            hi: hi + pad,
        }
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn x_axis(out: &mut String, range: Range, label: &str) {
    let y = HEIGHT - BOTTOM;
    let _ = writeln!(out, r#"<line x1="{LEFT}" y1="{y}" x2="{}" y2="{y}" stroke="black"/>"#, WIDTH - RIGHT);
    for i in 0..=4 {
        let v = range.lo + (range.hi - range.lo) * i as f64 / 4.0;
        let x = LEFT + (WIDTH - LEFT - RIGHT) * i as f64 / 4.0;
        let _ = writeln!(out, r#"<line x1="{x:.1}" y1="{y}" x2="{x:.1}" y2="{}" stroke="black"/>"#, y + 5.0);
        let _ = writeln!(out, r#"<text x="{x:.1}" y="{}" text-anchor="middle">{v:.2}</text>"#, y + 18.0);
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        HEIGHT - 12.0,
        escape(label)
    );
}

fn px(range: Range, v: f64) -> f64 {
    LEFT + (WIDTH - LEFT - RIGHT) * range.frac(v)
}

fn py(range: Range, v: f64) -> f64 {
    HEIGHT - BOTTOM - (HEIGHT - TOP - BOTTOM) * range.frac(v)
}

/// Plain x/y scatter.
pub fn scatter_svg(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)]) -> String {
    let xr = Range::of(points.iter().map(|p| p.0));
    let yr = Range::of(points.iter().map(|p| p.1));
    let mut out = String::new();
    header(&mut out, title);
    x_axis(&mut out, xr, x_label);
    let _ = writeln!(out, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/>"#, HEIGHT - BOTTOM);
    for i in 0..=4 {
        let v = yr.lo + (yr.hi - yr.lo) * i as f64 / 4.0;
        let y = py(yr, v);
        let _ = writeln!(out, r#"<line x1="{}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="black"/>"#, LEFT - 5.0);
        let _ = writeln!(out, r#"<text x="{}" y="{:.1}" text-anchor="end">{v:.2}</text>"#, LEFT - 8.0, y + 4.0);
    }
    let _ = writeln!(
        out,
        r#"<text transform="translate(18 {}) rotate(-90)" text-anchor="middle">{}</text>"#,
        TOP + (HEIGHT - TOP - BOTTOM) / 2.0,
        escape(y_label)
    );
    if yr.lo < 0.0 && yr.hi > 0.0 {
        let y0 = py(yr, 0.0);
        let _ = writeln!(
            out,
            r##"<line x1="{LEFT}" y1="{y0:.1}" x2="{}" y2="{y0:.1}" stroke="#bbbbbb" stroke-dasharray="4 3"/>"##,
            WIDTH - RIGHT
        );
    }
    for &(x, y) in points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
        let _ = writeln!(
            out,
            r##"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="#1e88e5" fill-opacity="0.6"/>"##,
            px(xr, x),
            py(yr, y)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// One horizontal strip per feature (first on top): x is the attribution,
/// colour runs blue (low feature value) to red (high).
pub fn summary_svg(title: &str, series: &[ScatterSeries]) -> String {
    let xr = Range::of(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let mut out = String::new();
    header(&mut out, title);
    x_axis(&mut out, xr, "SHAP value (log-odds)");
    let band = (HEIGHT - TOP - BOTTOM) / series.len().max(1) as f64;
    if xr.lo < 0.0 && xr.hi > 0.0 {
        let x0 = px(xr, 0.0);
        let _ = writeln!(
            out,
            r##"<line x1="{x0:.1}" y1="{TOP}" x2="{x0:.1}" y2="{}" stroke="#bbbbbb"/>"##,
            HEIGHT - BOTTOM
        );
    }
    for (row, s) in series.iter().enumerate() {
        let centre = TOP + band * (row as f64 + 0.5);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 8.0,
            centre + 4.0,
            escape(&s.name)
        );
        let vr = Range::of(s.points.iter().map(|p| p.0));
        for (i, &(value, phi)) in s.points.iter().enumerate() {
            if !phi.is_finite() {
                continue;
            }
            // Deterministic vertical jitter in [-0.35, 0.35] of the band.
            let jitter = ((i as u64).wrapping_mul(2_654_435_761) % 1000) as f64 / 1000.0 - 0.5;
            let t = vr.frac(value).clamp(0.0, 1.0);
            let (r, g, b) = (
                (30.0 + t * 225.0) as u8,
                (136.0 - t * 123.0) as u8,
                (229.0 - t * 142.0) as u8,
            );
            let _ = writeln!(
                out,
                r#"<circle cx="{:.1}" cy="{:.1}" r="2" fill="rgb({r},{g},{b})" fill-opacity="0.7"/>"#,
                px(xr, phi),
                centre + jitter * 0.7 * band
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scatter_has_one_circle_per_point() {
        let svg = scatter_svg("t", "x", "y", &[(0.0, 1.0), (1.0, -1.0), (2.0, 0.5)]);
        assert_eq!(svg.matches("<circle").count(), 3);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn summary_labels_every_feature() {
        let series = vec![
            ScatterSeries {
                feature: 0,
                name: "spi12".into(),
                points: vec![(0.1, 0.2), (0.3, -0.4)],
            },
            ScatterSeries {
                feature: 1,
                name: "spi6".into(),
                points: vec![(1.0, 0.0)],
            },
        ];
        let svg = summary_svg("Fire & co", &series);
        assert!(svg.contains(">spi12<") && svg.contains(">spi6<"));
        assert!(svg.contains("Fire &amp; co"));
        assert_eq!(svg.matches("<circle").count(), 3);
    }
}
