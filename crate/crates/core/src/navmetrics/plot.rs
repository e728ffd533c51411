//! Minimal SVG box plots for benchmark reports.

use std::fmt::Write as _;

use super::stats::quantile;
use super::{BenchmarkReport, METRIC_NAMES};

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 320.0;
const MARGIN: f64 = 48.0;

/// One box per planner for metric `metric` (index into [`METRIC_NAMES`]):
/// box from first to third quartile, median line, whiskers to min and max.
pub fn box_plot_svg(report: &BenchmarkReport, metric: usize) -> String {
    let series: Vec<(String, Vec<f64>)> = report
        .planners
        .iter()
        .map(|&p| {
            let mut v = report.values(p, metric);
            v.sort_by(f64::total_cmp);
            (p.name().to_string(), v)
        })
        .collect();
    let all = series.iter().flat_map(|(_, v)| v.iter().copied());
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        hi = lo + 1.0;
    }
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let y = |v: f64| MARGIN + plot_h * (1.0 - (v - lo) / (hi - lo));
    let slot = (WIDTH - 2.0 * MARGIN) / series.len().max(1) as f64;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        METRIC_NAMES[metric]
    );
    for (v, label) in [(lo, lo), (hi, hi)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.1}" text-anchor="end" font-family="sans-serif" font-size="10">{label:.2}</text>"#,
            MARGIN - 4.0,
            y(v) + 3.0
        );
    }
    let _ = writeln!(
        s,
        r#"<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{}" stroke="black"/>"#,
        HEIGHT - MARGIN
    );
    for (i, (name, v)) in series.iter().enumerate() {
        let cx = MARGIN + slot * (i as f64 + 0.5);
        let half = slot * 0.25;
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="10">{name}</text>"#,
            HEIGHT - MARGIN + 16.0
        );
        if v.is_empty() {
            continue;
        }
        let (q1, med, q3) = (quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75));
        let (min, max) = (v[0], v[v.len() - 1]);
        let _ = writeln!(
            s,
            r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#,
            y(max),
            y(min)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="lightsteelblue" stroke="black"/>"#,
            cx - half,
            y(q3),
            2.0 * half,
            (y(q1) - y(q3)).max(0.5)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black" stroke-width="2"/>"#,
            cx - half,
            y(med),
            cx + half,
            y(med)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::navmetrics::{BenchRow, MetricSample, Planner};

    #[test]
    fn one_box_per_planner() {
        let row = |planner, q, v: f64| BenchRow {
            map: "m".into(),
            query: q,
            planner,
            outcome: Ok(MetricSample {
                dtco: v,
                av: v,
                dsp: v,
                cd: v,
                trts: 1.0,
            }),
        };
        let mut report = BenchmarkReport {
            planners: vec![Planner::ZhangSuen, Planner::GridAstar],
            rows: (0..5)
                .flat_map(|q| [row(Planner::ZhangSuen, q, q as f64), row(Planner::GridAstar, q, 2.0)])
                .collect(),
            aggregates: vec![],
        };
        report.aggregates = report.compute_aggregates();
        let svg = box_plot_svg(&report, 0);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("lightsteelblue").count(), 2);
        assert!(svg.contains("zhangsuen-roadmap") && svg.contains("grid-astar"));
        // constant metric still renders
        assert!(box_plot_svg(&report, 4).contains("</svg>"));
    }
}
