//! Standalone SVG line charts.

use std::fmt::Write;

use twoscale::experiments::HysteresisReport;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: impl IntoIterator<Item = (f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points: points.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Chart<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub log_y: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Roughly five round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|f| f * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return None;
    }
    Some(if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) })
}

/// Line chart with one polyline per series. On a log axis, non-positive
/// values are dropped.
pub fn line_chart(chart: &Chart, series: &[Series]) -> String {
    let keep = |y: f64| y.is_finite() && (!chart.log_y || y > 0.0);
    let ty = |y: f64| if chart.log_y { y.log10() } else { y };
    let xs = series.iter().flat_map(|s| s.points.iter().filter(|p| p.0.is_finite() && keep(p.1)).map(|p| p.0));
    let ys = series.iter().flat_map(|s| s.points.iter().filter(|p| p.0.is_finite() && keep(p.1)).map(|p| ty(p.1)));
    let (x0, x1) = range(xs).unwrap_or((0.0, 1.0));
    let (mut y0, mut y1) = range(ys).unwrap_or((0.0, 1.0));
    if chart.log_y {
        y0 = y0.floor();
        y1 = y1.ceil().max(y0 + 1.0);
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(chart.title));
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for t in ticks(x0, x1) {
        let x = px(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ccc"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP,
            TOP + ph,
            TOP + ph + 16.0,
            short(t)
        );
    }
    let yticks: Vec<f64> = if chart.log_y { (y0 as i64..=y1 as i64).map(|k| k as f64).collect() } else { ticks(y0, y1) };
    for t in yticks {
        let y = py(t);
        let label = if chart.log_y { format!("1e{}", t as i64) } else { short(t) };
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ccc"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(chart.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(chart.y_label)
    );
    for (k, ser) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.0.is_finite() && keep(p.1))
            .map(|p| format!("{:.2},{:.2}", px(p.0), py(ty(p.1))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-label="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            escape(&ser.label),
            pts.join(" ")
        );
        let ly = TOP + 14.0 + 18.0 * k as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn short(x: f64) -> String {
    let r = (x * 1e9).round() / 1e9;
    if r == 0.0 {
        "0".into()
    } else if r.abs() >= 1e4 || r.abs() < 1e-3 {
        format!("{r:.1e}")
    } else {
        format!("{r}")
    }
}

/// `d(t)` per run on a log axis.
pub fn distance_chart(series: &[Series]) -> String {
    line_chart(
        &Chart {
            title: "distance to the equilibrium",
            x_label: "t",
            y_label: "d(t) (H2)",
            log_y: true,
        },
        series,
    )
}

/// `m.u` against `lambda` over one measured cycle, one polyline per sweep
/// branch (split at the smallest `lambda`).
pub fn loop_chart(points: &[(f64, f64)]) -> String {
    let apex = points
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
        .map_or(0, |(i, _)| i);
    let (down, up) = if points.is_empty() { (&points[..0], &points[..0]) } else { (&points[..=apex], &points[apex..]) };
    let series = [Series::new("falling", down.iter().copied()), Series::new("rising", up.iter().copied())];
    line_chart(
        &Chart {
            title: "hysteresis loop",
            x_label: "lambda",
            y_label: "m.u",
            log_y: false,
        },
        &series,
    )
}

/// [`loop_chart`] of the measured cycle of a run.
pub fn report_loop_chart(rep: &HysteresisReport) -> String {
    let pts: Vec<(f64, f64)> = rep.table[rep.measured.clone()].iter().map(|p| (p.lambda, p.m_u)).collect();
    loop_chart(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        assert_eq!(ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert!(ticks(-0.37, 0.37).contains(&0.0));
    }

    #[test]
    fn log_chart_drops_non_positive_points() {
        let s = Series::new("a", vec![(0.0, 1.0), (1.0, 0.0), (2.0, 0.01)]);
        let out = distance_chart(&[s]);
        let line = out.lines().find(|l| l.contains("<polyline")).unwrap();
        let pts = line.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
        assert_eq!(pts.split(' ').count(), 2);
    }

    #[test]
    fn labels_are_escaped() {
        let out = line_chart(
            &Chart {
                title: "a<b",
                x_label: "x",
                y_label: "y",
                log_y: false,
            },
            &[],
        );
        assert!(out.contains("a&lt;b"));
    }
}
