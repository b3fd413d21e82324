//! Minimal line charts: one panel per series, stacked vertically.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const PANEL_HEIGHT: f64 = 240.0;
const MARGIN: f64 = 48.0;

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: &str, points: Vec<(f64, f64)>) -> Self {
        Series { label: label.to_owned(), points }
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

pub fn chart(x_label: &str, series: &[Series]) -> String {
    let height = PANEL_HEIGHT * series.len().max(1) as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    for (i, s) in series.iter().enumerate() {
        let top = PANEL_HEIGHT * i as f64;
        let (x0, x1) = bounds(s.points.iter().map(|p| p.0));
        let (y0, y1) = bounds(s.points.iter().map(|p| p.1));
        let (left, right) = (MARGIN, WIDTH - MARGIN / 2.0);
        let (upper, lower) = (top + MARGIN / 2.0, top + PANEL_HEIGHT - MARGIN);
        let px = |x: f64| left + (x - x0) / (x1 - x0) * (right - left);
        let py = |y: f64| lower - (y - y0) / (y1 - y0) * (lower - upper);

        let _ = writeln!(
            svg,
            r#"<rect x="{left}" y="{upper}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            right - left,
            lower - upper
        );
        let _ = writeln!(svg, r#"<text x="{left}" y="{}" font-size="12">{}</text>"#, upper - 6.0, s.label);
        let _ = writeln!(
            svg,
            r#"<text x="{right}" y="{}" font-size="11" text-anchor="end">{x_label}</text>"#,
            lower + 30.0
        );
        for (v, y) in [(y0, lower), (y1, upper)] {
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{v:.4}</text>"#,
                left - 4.0,
                y + 4.0
            );
        }
        for (v, x) in [(x0, left), (x1, right)] {
            let _ = writeln!(
                svg,
                r#"<text x="{x}" y="{}" font-size="10" text-anchor="middle">{v:.4}</text>"#,
                lower + 14.0
            );
        }
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_series() {
        let svg = chart(
            "t",
            &[Series::new("a", vec![(0.0, 1.0), (1.0, 2.0)]), Series::new("b", vec![(0.0, 3.0), (1.0, 3.0)])],
        );
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn empty_series_still_renders() {
        let svg = chart("t", &[Series::new("a", vec![])]);
        assert!(!svg.contains("NaN"));
    }
}
