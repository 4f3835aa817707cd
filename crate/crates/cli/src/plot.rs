//! SVG regret-vs-cost plot drawn from `aggregate.csv` and the per-group
//! `curve.csv` files next to it.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, Result};

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// One plotted group.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub avg_cost: f64,
    pub cost: Vec<f64>,
    pub mean: Vec<f64>,
    pub half_std: Vec<f64>,
}

fn parse(field: &str, what: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| CliError::Config(format!("bad {what} value {field:?}")))
}

/// Reads every group of `aggregate` that has a curve file.
pub fn load_series(aggregate: &Path) -> Result<Vec<Series>> {
    let dir = aggregate.parent().unwrap_or(Path::new("."));
    let mut rd = csv::Reader::from_path(aggregate)?;
    let headers = rd.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("aggregate file has no {name} column")))
    };
    let (label_col, cost_col) = (col("label")?, col("cost_mean")?);
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let label = row[label_col].to_string();
        let curve = dir.join(&label).join("curve.csv");
        if !curve.exists() {
            continue;
        }
        let mut s = Series {
            avg_cost: parse(&row[cost_col], "cost_mean")?,
            label,
            cost: Vec::new(),
            mean: Vec::new(),
            half_std: Vec::new(),
        };
        for r in csv::Reader::from_path(&curve)?.records() {
            let r = r?;
            s.cost.push(parse(&r[0], "cost")?);
            s.mean.push(parse(&r[1], "mean_regret")?);
            s.half_std.push(parse(&r[2], "half_std")?);
        }
        out.push(s);
    }
    Ok(out)
}

/// Mean regret line with a ±0.5 std band per series and a dashed vertical
/// line at each series' average total cost.
pub fn render_svg(series: &[Series], title: &str) -> String {
    let x_max = series
        .iter()
        .flat_map(|s| s.cost.iter().copied().chain([s.avg_cost]))
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
        .max(1e-12);
    let y_max = series
        .iter()
        .flat_map(|s| s.mean.iter().zip(&s.half_std).map(|(m, h)| m + h))
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
        .max(1e-12);
    let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let px = |x: f64| MARGIN + pw * x / x_max;
    let py = |y: f64| HEIGHT - MARGIN - ph * y.max(0.0) / y_max;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        svg,
        r#"<path d="M{l},{t} L{l},{b} L{r},{b}" stroke="black" fill="none"/>"#,
        l = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    for i in 0..=4 {
        let fx = x_max * i as f64 / 4.0;
        let fy = y_max * i as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            px(fx),
            HEIGHT - MARGIN + 18.0,
            tick(fx)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            MARGIN - 6.0,
            py(fy) + 4.0,
            tick(fy)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">cost</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">regret</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let upper = s.cost.iter().zip(&s.mean).zip(&s.half_std);
        let mut band: Vec<String> = upper
            .clone()
            .map(|((x, m), h)| format!("{:.2},{:.2}", px(*x), py(m + h)))
            .collect();
        band.extend(
            upper
                .rev()
                .map(|((x, m), h)| format!("{:.2},{:.2}", px(*x), py(m - h))),
        );
        let _ = writeln!(
            svg,
            r#"<polygon points="{}" fill="{c}" fill-opacity="0.15" stroke="none"/>"#,
            band.join(" ")
        );
        let line: Vec<String> = s
            .cost
            .iter()
            .zip(&s.mean)
            .map(|(x, m)| format!("{:.2},{:.2}", px(*x), py(*m)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#,
            line.join(" ")
        );
        if s.avg_cost.is_finite() {
            let _ = writeln!(
                svg,
                r#"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="{c}" stroke-dasharray="5,4"/>"#,
                MARGIN,
                HEIGHT - MARGIN,
                x = px(s.avg_cost)
            );
        }
        let ly = MARGIN + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{c}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            WIDTH - MARGIN - 150.0,
            WIDTH - MARGIN - 130.0,
            WIDTH - MARGIN - 124.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 0.01 && v.abs() < 1e4 {
        format!("{v:.2}")
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_and_marker_per_series() {
        let s = |label: &str| Series {
            label: label.into(),
            avg_cost: 1.0,
            cost: vec![0.0, 1.0, 2.0],
            mean: vec![3.0, 1.0, 0.5],
            half_std: vec![0.5, 0.2, 0.0],
        };
        let svg = render_svg(&[s("a<b"), s("c")], "branin");
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(svg.matches("stroke-dasharray").count(), 2);
        assert!(svg.contains("a&lt;b"));
    }
}
