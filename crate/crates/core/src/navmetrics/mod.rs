//! Navigability metrics for planned paths, and the corpus benchmark built on
//! them.
//!
//! Every metric is an average over arc-length samples taken every
//! [`SAMPLE_STEP`] cells along the path (plus the final waypoint). All
//! distances are in cell units.

mod bench;
pub mod plot;
pub mod stats;

use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

use crate::gridmap::{ClearanceField, OccupancyGrid};
use crate::point::Point;
use crate::roadmap::{Path, Query};
pub use bench::{
    run_benchmark, Aggregate, BenchError, BenchRow, BenchmarkConfig, BenchmarkReport, MapContext, PlanError, Planner,
    PlannerSettings, METRIC_NAMES,
};
pub use bench::{sample_queries, skeletonize};

pub const SAMPLE_STEP: f64 = 0.5;
pub const RAY_STEP: f64 = 0.1;
pub const DEFAULT_SCOPE: f64 = 3.0;

/// The five per-path metrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricSample {
    pub dtco: f64,
    pub av: f64,
    pub dsp: f64,
    pub cd: f64,
    pub trts: f64,
}

impl MetricSample {
    pub fn values(&self) -> [f64; 5] {
        [self.dtco, self.av, self.dsp, self.cd, self.trts]
    }
}

/// Points every `SAMPLE_STEP` of arc length, always including both ends.
pub fn sample_path(path: &Path) -> Vec<Point> {
    let mut out = Vec::new();
    let Some(&first) = path.waypoints.first() else {
        return out;
    };
    out.push(first);
    // distance still to travel before the next sample is due
    let mut pending = SAMPLE_STEP;
    for (a, b) in path.segments() {
        let len = a.distance(b);
        let mut t = pending;
        while t <= len {
            out.push(a.lerp(b, t / len));
            t += SAMPLE_STEP;
        }
        pending = t - len;
    }
    let last = *path.waypoints.last().unwrap();
    if out.last() != Some(&last) && out.last().is_some_and(|p| p.distance(last) > 1e-9) {
        out.push(last);
    }
    out
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Distance to the closest obstacle: clearance interpolated along the path.
pub fn dtco(path: &Path, field: &ClearanceField) -> f64 {
    mean(sample_path(path).into_iter().map(|p| field.sample(p)))
}

/// Marches from `origin` along `angle` in [`RAY_STEP`] increments until the
/// first occupied (or off-map) cell. Returns the march distance at the hit
/// and the distance from `origin` to that cell's center. Stops early with
/// `None` once the march passes `max_dist`.
pub fn cast_ray(grid: &OccupancyGrid, origin: Point, angle: f64, max_dist: f64) -> Option<(f64, f64)> {
    let dir = Point::new(angle.cos(), angle.sin());
    let mut i = 0u32;
    loop {
        let t = f64::from(i) * RAY_STEP;
        if t > max_dist {
            return None;
        }
        let p = origin + dir * t;
        match grid.cell_of(p) {
            Ok((x, y)) if grid.is_free(x, y) => {}
            Ok((x, y)) => return Some((t, origin.distance(Point::cell_center(x, y)))),
            // off the map counts as a wall one step past the edge
            Err(_) => return Some((t, t)),
        }
        i += 1;
    }
}

/// Distances to the first occupied cell center along 8 rays at multiples of
/// 45°.
pub fn ray_distances(grid: &OccupancyGrid, p: Point) -> [f64; 8] {
    std::array::from_fn(|k| {
        cast_ray(grid, p, k as f64 * FRAC_PI_4, f64::INFINITY)
            .expect("unbounded ray always hits")
            .1
    })
}

/// Mean over path samples of the mean 8-ray obstacle distance.
pub fn average_visibility(path: &Path, grid: &OccupancyGrid) -> f64 {
    mean(
        sample_path(path)
            .into_iter()
            .map(|p| mean(ray_distances(grid, p).into_iter())),
    )
}

/// Mean over path samples of the shortest 8-ray obstacle distance.
pub fn characteristic_dimension(path: &Path, grid: &OccupancyGrid) -> f64 {
    mean(
        sample_path(path)
            .into_iter()
            .map(|p| ray_distances(grid, p).into_iter().fold(f64::INFINITY, f64::min)),
    )
}

/// Number of blocked/free changes around 16 rays (multiples of 22.5°) cut
/// off at `scope` cells, counted circularly. Ranges over even values 0..=16.
pub fn dispersion_at(grid: &OccupancyGrid, p: Point, scope: f64) -> u32 {
    let blocked: [bool; 16] = std::array::from_fn(|k| cast_ray(grid, p, k as f64 * FRAC_PI_8, scope).is_some());
    (0..16).filter(|&k| blocked[k] != blocked[(k + 1) % 16]).count() as u32
}

pub fn dispersion(path: &Path, grid: &OccupancyGrid, scope: f64) -> f64 {
    mean(
        sample_path(path)
            .into_iter()
            .map(|p| f64::from(dispersion_at(grid, p, scope))),
    )
}

/// Straightness: start-goal distance over path length, in `(0, 1]`. A query
/// with equal endpoints scores 1.
pub fn tortuosity(path: &Path, query: &Query) -> f64 {
    let direct = query.start.distance(query.goal);
    if direct == 0.0 || path.length == 0.0 {
        return 1.0;
    }
    direct / path.length
}

/// The literal length ratio, path length over start-goal distance (≥ 1).
pub fn length_ratio(path: &Path, query: &Query) -> f64 {
    1.0 / tortuosity(path, query)
}

pub fn evaluate(path: &Path, query: &Query, grid: &OccupancyGrid, field: &ClearanceField, scope: f64) -> MetricSample {
    MetricSample {
        dtco: dtco(path, field),
        av: average_visibility(path, grid),
        dsp: dispersion(path, grid, scope),
        cd: characteristic_dimension(path, grid),
        trts: tortuosity(path, query),
    }
}
