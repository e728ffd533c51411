//! Classical skeletonization back-ends.
//!
//! [`zhang_suen`] thins the free space to a one-pixel-wide, 8-connected
//! skeleton. The medial-axis route draws random free-space samples
//! ([`sample_free`]), pushes each one uphill on the clearance field
//! ([`ma_retract`]) and keeps only samples whose clearance disc is not
//! swallowed by another sample's disc ([`ma_filter`]).

mod thinning;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::gridmap::io::{encode_gray, read_gray, MapFormat, MapIoError};
use crate::gridmap::{ClearanceField, GridError, OccupancyGrid};
use crate::point::Point;

pub use thinning::zhang_suen;

#[derive(Debug, Error, PartialEq)]
pub enum SkeletonError {
    #[error("the map has no free cell to sample from")]
    NoFreeSpace,
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("sample {index} at {point} lies in an occupied cell")]
    SampleInObstacle { index: usize, point: Point },
    #[error("mask is {got_w}x{got_h}, grid is {want_w}x{want_h}")]
    DimensionMismatch {
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },
    #[error("skeleton pixel ({x}, {y}) lies on an occupied cell")]
    PixelOnObstacle { x: usize, y: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Binary mask over the grid; `true` marks a skeleton pixel.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SkeletonMask {
    width: usize,
    height: usize,
    mask: Vec<bool>,
}

impl SkeletonMask {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            mask: vec![false; width * height],
        }
    }

    /// Wraps raw mask bits, checking that every skeleton pixel is free in `grid`.
    pub fn new(grid: &OccupancyGrid, mask: Vec<bool>) -> Result<Self, SkeletonError> {
        let m = Self {
            width: grid.width(),
            height: grid.height(),
            mask,
        };
        if m.mask.len() != grid.len() {
            return Err(SkeletonError::DimensionMismatch {
                got_w: m.mask.len(),
                got_h: 1,
                want_w: grid.width(),
                want_h: grid.height(),
            });
        }
        m.check_free(grid)?;
        Ok(m)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.mask
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.mask[y * self.width + x] = on;
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Skeleton pixel coordinates in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }

    pub fn check_free(&self, grid: &OccupancyGrid) -> Result<(), SkeletonError> {
        if (self.width, self.height) != (grid.width(), grid.height()) {
            return Err(SkeletonError::DimensionMismatch {
                got_w: self.width,
                got_h: self.height,
                want_w: grid.width(),
                want_h: grid.height(),
            });
        }
        match self.pixels().find(|&(x, y)| !grid.is_free(x, y)) {
            Some((x, y)) => Err(SkeletonError::PixelOnObstacle { x, y }),
            None => Ok(()),
        }
    }

    /// Number of 8-connected components of skeleton pixels.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.mask.len()];
        let mut stack = Vec::new();
        let mut count = 0;
        for start in 0..self.mask.len() {
            if !self.mask[start] || seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(i) = stack.pop() {
                let (x, y) = ((i % self.width) as i64, (i / self.width) as i64);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx < 0 || ny < 0 || nx >= self.width as i64 || ny >= self.height as i64 {
                            continue;
                        }
                        let j = ny as usize * self.width + nx as usize;
                        if self.mask[j] && !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
        }
        count
    }

    /// Whether any 2x2 window is entirely skeleton.
    pub fn has_square_block(&self) -> bool {
        (1..self.height).any(|y| {
            (1..self.width)
                .any(|x| self.get(x, y) && self.get(x - 1, y) && self.get(x, y - 1) && self.get(x - 1, y - 1))
        })
    }

    /// Grayscale raster with 255 on skeleton pixels and 0 elsewhere.
    pub fn encode(&self, format: MapFormat) -> Vec<u8> {
        let pixels: Vec<u8> = self.mask.iter().map(|&b| if b { 255 } else { 0 }).collect();
        encode_gray(self.width, self.height, &pixels, format)
    }

    /// Inverse of [`encode`](Self::encode); the format is sniffed from the bytes.
    pub fn decode(bytes: &[u8], grid: &OccupancyGrid) -> Result<Self, MapIoError> {
        let format = MapFormat::detect(bytes).ok_or_else(|| MapIoError::Format("unrecognized mask format".into()))?;
        let raw = read_gray(bytes, format)?;
        if (raw.0, raw.1) != (grid.width(), grid.height()) {
            return Err(MapIoError::Format(format!(
                "mask is {}x{}, map is {}x{}",
                raw.0,
                raw.1,
                grid.width(),
                grid.height()
            )));
        }
        let mut mask = Vec::with_capacity(raw.2.len());
        for (i, &v) in raw.2.iter().enumerate() {
            match v {
                0 => mask.push(false),
                255 => mask.push(true),
                value => {
                    return Err(MapIoError::Value {
                        x: i % raw.0,
                        y: i / raw.0,
                        value,
                    })
                }
            }
        }
        SkeletonMask::new(grid, mask).map_err(|e| MapIoError::Format(e.to_string()))
    }
}

/// Continuous free-space points; order is meaningful (ties resolve by index).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleSet {
    pub points: Vec<Point>,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `n` i.i.d. points, uniform over the union of free cells.
pub fn sample_free(grid: &OccupancyGrid, n: usize, seed: u64) -> Result<SampleSet, SkeletonError> {
    if n == 0 {
        return Err(SkeletonError::NoSamples);
    }
    let free: Vec<(usize, usize)> = grid.free_cells().collect();
    if free.is_empty() {
        return Err(SkeletonError::NoFreeSpace);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| {
            let (cx, cy) = free[rng.random_range(0..free.len())];
            let (x0, y0) = (cx as f64, cy as f64);
            // keep the point inside its cell even if x0 + u rounds up
            let x = (x0 + rng.random::<f64>()).min((x0 + 1.0).next_down());
            let y = (y0 + rng.random::<f64>()).min((y0 + 1.0).next_down());
            Point::new(x, y)
        })
        .collect();
    Ok(SampleSet { points })
}

pub const RETRACT_STEP: f64 = 0.5;
pub const RETRACT_TOLERANCE: f64 = 1e-6;
const RETRACT_MAX_STEPS: usize = 10_000;

const DIRECTIONS: [(f64, f64); 8] = [
    (1.0, 0.0),
    (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
    (0.0, 1.0),
    (-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
    (-1.0, 0.0),
    (-std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2),
    (0.0, -1.0),
    (std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2),
];

fn in_free_cell(field: &ClearanceField, p: Point) -> bool {
    if !p.is_finite() || p.x < 0.0 || p.y < 0.0 {
        return false;
    }
    let (x, y) = (p.x.floor() as usize, p.y.floor() as usize);
    x < field.width() && y < field.height() && field.at(x, y) > 0.0
}

/// Hill-climbs one point on the bilinear clearance field.
pub fn retract_point(p: Point, field: &ClearanceField) -> Point {
    let mut current = p;
    let mut value = field.sample(current);
    for _ in 0..RETRACT_MAX_STEPS {
        let mut best: Option<(Point, f64)> = None;
        for (dx, dy) in DIRECTIONS {
            let c = Point::new(current.x + dx * RETRACT_STEP, current.y + dy * RETRACT_STEP);
            if !in_free_cell(field, c) {
                continue;
            }
            let v = field.sample(c);
            if best.is_none_or(|(_, bv)| v > bv) {
                best = Some((c, v));
            }
        }
        match best {
            Some((c, v)) if v - value > RETRACT_TOLERANCE => {
                current = c;
                value = v;
            }
            _ => break,
        }
    }
    current
}

/// Moves every sample onto a clearance ridge by discrete steepest ascent
/// (0.5-cell steps in 8 directions, stopping once no step gains more than
/// 1e-6). Output order matches input order.
pub fn ma_retract(samples: &SampleSet, field: &ClearanceField) -> SampleSet {
    SampleSet {
        points: samples.points.par_iter().map(|&p| retract_point(p, field)).collect(),
    }
}

pub const DISC_TOLERANCE: f64 = 1e-9;

/// Whether the clearance disc at `inner` lies within the one at `outer`.
pub fn disc_contained(inner: Point, r_inner: f64, outer: Point, r_outer: f64) -> bool {
    inner.distance(outer) + r_inner <= r_outer + DISC_TOLERANCE
}

/// Keeps samples whose clearance disc is not contained in another sample's
/// disc. Of two mutually containing (equal) discs the lower index survives.
pub fn ma_filter(samples: &SampleSet, field: &ClearanceField) -> SampleSet {
    let pts = &samples.points;
    let radii: Vec<f64> = pts.iter().map(|&p| field.sample(p)).collect();
    let mut by_radius: Vec<usize> = (0..pts.len()).collect();
    by_radius.sort_by(|&a, &b| radii[b].total_cmp(&radii[a]).then(a.cmp(&b)));

    let dominated = |i: usize| {
        // only discs at least as large (up to tolerance) can contain disc i
        by_radius
            .iter()
            .take_while(|&&j| radii[j] >= radii[i] - DISC_TOLERANCE)
            .any(|&j| {
                j != i
                    && disc_contained(pts[i], radii[i], pts[j], radii[j])
                    && (j < i || !disc_contained(pts[j], radii[j], pts[i], radii[i]))
            })
    };
    SampleSet {
        points: (0..pts.len()).filter(|&i| !dominated(i)).map(|i| pts[i]).collect(),
    }
}

/// Marks the cell containing each sample.
pub fn samples_to_mask(samples: &SampleSet, grid: &OccupancyGrid) -> Result<SkeletonMask, SkeletonError> {
    let mut mask = SkeletonMask::empty(grid.width(), grid.height());
    for (index, &p) in samples.points.iter().enumerate() {
        let (x, y) = grid.cell_of(p)?;
        if !grid.is_free(x, y) {
            return Err(SkeletonError::SampleInObstacle { index, point: p });
        }
        mask.set(x, y, true);
    }
    Ok(mask)
}

/// Full medial-axis back-end: sample, retract, filter, rasterize.
pub fn medial_axis_mask(
    grid: &OccupancyGrid,
    field: &ClearanceField,
    samples: usize,
    seed: u64,
) -> Result<SkeletonMask, SkeletonError> {
    let raw = sample_free(grid, samples, seed)?;
    let kept = ma_filter(&ma_retract(&raw, field), field);
    samples_to_mask(&kept, grid)
}

/// Fraction of free cells whose center lies within `radius` of some point.
pub fn free_space_coverage(grid: &OccupancyGrid, points: &[Point], radius: f64) -> f64 {
    let free = grid.free_count();
    if free == 0 {
        return 0.0;
    }
    let r2 = radius * radius;
    let covered = grid
        .free_cells()
        .filter(|&(x, y)| {
            let c = Point::cell_center(x, y);
            points.iter().any(|p| p.distance_squared(c) <= r2)
        })
        .count();
    covered as f64 / free as f64
}

/// Cell centers of the mask's skeleton pixels.
pub fn mask_points(mask: &SkeletonMask) -> Vec<Point> {
    mask.pixels().map(|(x, y)| Point::cell_center(x, y)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::distance_transform;

    fn corridor(len: usize, inner: usize) -> OccupancyGrid {
        OccupancyGrid::from_fn(len, inner + 2, |x, y| x > 0 && x < len - 1 && y >= 1 && y <= inner).unwrap()
    }

    #[test]
    fn samples_are_free_and_deterministic() {
        let g = corridor(30, 5);
        let a = sample_free(&g, 500, 3).unwrap();
        assert_eq!(a, sample_free(&g, 500, 3).unwrap());
        assert_ne!(a, sample_free(&g, 500, 4).unwrap());
        assert!(a.points.iter().all(|&p| g.is_free_at(p)));
        assert_eq!(sample_free(&g, 0, 1), Err(SkeletonError::NoSamples));
        let full = OccupancyGrid::filled(4, 4).unwrap();
        assert_eq!(sample_free(&full, 3, 1), Err(SkeletonError::NoFreeSpace));
    }

    #[test]
    fn retraction_fixed_point_at_room_center() {
        // 9x9 free room: the center cell is the unique clearance maximum.
        let g = OccupancyGrid::from_fn(11, 11, |x, y| (1..10).contains(&x) && (1..10).contains(&y)).unwrap();
        let f = distance_transform(&g);
        let c = Point::new(5.5, 5.5);
        assert_eq!(retract_point(c, &f), c);
    }

    #[test]
    fn retraction_is_monotone_and_centers_corridor() {
        let g = corridor(60, 9);
        let f = distance_transform(&g);
        let s = sample_free(&g, 300, 11).unwrap();
        // keep away from the corridor's end caps
        let s = SampleSet {
            points: s.points.into_iter().filter(|p| p.x > 8.0 && p.x < 52.0).collect(),
        };
        let r = ma_retract(&s, &f);
        for (a, b) in s.points.iter().zip(&r.points) {
            assert!(f.sample(*b) >= f.sample(*a));
            assert!((b.y - 5.5).abs() <= 0.5, "{a} -> {b}");
        }
    }

    #[test]
    fn filter_disc_arithmetic() {
        // x: r = 1 at distance 1 from y: r = 3 -> dropped
        assert!(disc_contained(Point::new(0.0, 0.0), 1.0, Point::new(1.0, 0.0), 3.0));
        assert!(!disc_contained(Point::new(0.0, 0.0), 2.5, Point::new(1.0, 0.0), 3.0));
    }

    #[test]
    fn coincident_samples_keep_first() {
        let g = corridor(20, 5);
        let f = distance_transform(&g);
        let p = Point::new(10.5, 3.5);
        let kept = ma_filter(&SampleSet { points: vec![p, p] }, &f);
        assert_eq!(kept.points, vec![p]);
    }

    #[test]
    fn mask_rasterization() {
        let g = corridor(20, 5);
        assert_eq!(samples_to_mask(&SampleSet::default(), &g).unwrap().count(), 0);
        let one = SampleSet {
            points: vec![Point::new(3.2, 2.7)],
        };
        let m = samples_to_mask(&one, &g).unwrap();
        assert_eq!(m.pixels().collect::<Vec<_>>(), vec![(3, 2)]);
        let many = SampleSet {
            points: vec![
                Point::new(3.2, 2.7),
                Point::new(3.9, 2.1),
                Point::new(5.5, 5.5),
                Point::new(10.0, 1.0),
            ],
        };
        assert_eq!(samples_to_mask(&many, &g).unwrap().count(), 3);
        let outside = SampleSet {
            points: vec![Point::new(25.0, 1.0)],
        };
        assert!(matches!(
            samples_to_mask(&outside, &g),
            Err(SkeletonError::Grid(GridError::OutOfBounds { .. }))
        ));
        let blocked = SampleSet {
            points: vec![Point::new(0.5, 0.5)],
        };
        assert!(matches!(
            samples_to_mask(&blocked, &g),
            Err(SkeletonError::SampleInObstacle { index: 0, .. })
        ));
    }

    #[test]
    fn mask_pgm_round_trip() {
        let g = corridor(20, 5);
        let m = zhang_suen(&g);
        let bytes = m.encode(MapFormat::PgmBinary);
        assert_eq!(SkeletonMask::decode(&bytes, &g).unwrap(), m);
    }
}
