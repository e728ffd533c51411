use std::fmt::Write as _;

use super::{ExecutedTrajectory, Flag, RiskReport};
use crate::gridmap::OccupancyGrid;
use crate::roadmap::Path;

const SCALE: f64 = 8.0;

fn polyline(points: impl Iterator<Item = (f64, f64)>, color: &str, width: f64) -> String {
    let mut pts = String::new();
    for (x, y) in points {
        let _ = write!(pts, "{:.2},{:.2} ", x * SCALE, y * SCALE);
    }
    format!(
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"/>"#,
        pts.trim_end()
    )
}

/// Map with the planned path in red and, if given, the executed trajectory
/// in blue with risky samples marked in orange.
pub fn overlay_svg(
    grid: &OccupancyGrid,
    planned: &Path,
    executed: Option<(&ExecutedTrajectory, &RiskReport, f64)>,
) -> String {
    let (w, h) = (grid.width() as f64 * SCALE, grid.height() as f64 * SCALE);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for y in 0..grid.height() {
        for x in 0..grid.width() {
            if !grid.is_free(x, y) {
                let _ = writeln!(
                    s,
                    r#"<rect x="{}" y="{}" width="{SCALE}" height="{SCALE}" fill="black"/>"#,
                    x as f64 * SCALE,
                    y as f64 * SCALE
                );
            }
        }
    }
    if let Some((traj, report, cell_size)) = executed {
        let cells = (0..traj.samples.len()).map(|i| traj.cell_position(i, cell_size));
        s.push_str(&polyline(cells.clone().map(|p| (p.x, p.y)), "blue", 1.0));
        s.push('\n');
        for (p, flag) in cells.zip(&report.flags) {
            if *flag != Flag::Safe {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="1.5" fill="orange"/>"#,
                    p.x * SCALE,
                    p.y * SCALE
                );
            }
        }
    }
    s.push_str(&polyline(planned.waypoints.iter().map(|p| (p.x, p.y)), "red", 2.0));
    s.push_str("\n</svg>\n");
    s
}
