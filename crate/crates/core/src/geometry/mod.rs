//! Polygonal obstacle extraction and segment collision predicates.
//!
//! Obstacle boundaries live on the cell lattice: a lattice vertex `(i, j)` is
//! the shared corner of cells `(i-1, j-1)`, `(i, j-1)`, `(i-1, j)` and `(i, j)`,
//! and has the same continuous coordinates as the point `(i, j)`. Cells outside
//! the grid are treated as free so the map border itself gets a closed outline.

pub mod predicates;

use std::fmt::Write as _;

use thiserror::Error;

use crate::gridmap::{GridError, OccupancyGrid};
use crate::point::Point;
use predicates::{ray_crosses, segments_intersect};

/// A lattice vertex where an occupied region's boundary turns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Corner {
    pub x: i64,
    pub y: i64,
    /// `true` when one cell of the 2x2 window is occupied (the obstacle bulges
    /// into free space), `false` when three are.
    pub convex: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CornerSet {
    pub corners: Vec<Corner>,
}

impl CornerSet {
    pub fn len(&self) -> usize {
        self.corners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corners.is_empty()
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        self.corners.binary_search_by(|c| (c.y, c.x).cmp(&(y, x))).is_ok()
    }
}

fn occupied(grid: &OccupancyGrid, x: i64, y: i64) -> bool {
    x >= 0
        && y >= 0
        && (x as usize) < grid.width()
        && (y as usize) < grid.height()
        && !grid.is_free(x as usize, y as usize)
}

/// Occupancy of the 2x2 window around lattice vertex `(i, j)`, in the order
/// NW, NE, SW, SE.
fn window(grid: &OccupancyGrid, i: i64, j: i64) -> [bool; 4] {
    [
        occupied(grid, i - 1, j - 1),
        occupied(grid, i, j - 1),
        occupied(grid, i - 1, j),
        occupied(grid, i, j),
    ]
}

/// Every lattice vertex whose 2x2 window holds exactly one or exactly three
/// occupied cells, in row-major order.
pub fn seek_corners(grid: &OccupancyGrid) -> CornerSet {
    let mut corners = Vec::new();
    for j in 0..=grid.height() as i64 {
        for i in 0..=grid.width() as i64 {
            let n = window(grid, i, j).iter().filter(|&&o| o).count();
            if n == 1 || n == 3 {
                corners.push(Corner {
                    x: i,
                    y: j,
                    convex: n == 1,
                });
            }
        }
    }
    CornerSet { corners }
}

/// Closed boundary of an occupied region, one vertex per corner.
///
/// Outer boundaries run clockwise on screen (occupied on the right, y down)
/// and have positive [`signed_area`](Polygon::signed_area); hole boundaries
/// run the other way and are flagged `inner`.
#[derive(Clone, Debug, PartialEq)]
pub struct Polygon {
    pub vertices: Vec<Point>,
    pub inner: bool,
}

impl Polygon {
    /// Shoelace area, positive for outer boundaries.
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let twice: f64 = (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                a.x * b.y - b.x * a.y
            })
            .sum();
        twice / 2.0
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    fn bounds(&self) -> Bounds {
        let mut b = Bounds::EMPTY;
        for v in &self.vertices {
            b.include(*v);
        }
        b
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Bounds {
    min: Point,
    max: Point,
}

impl Bounds {
    const EMPTY: Bounds = Bounds {
        min: Point::new(f64::INFINITY, f64::INFINITY),
        max: Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    };

    fn include(&mut self, p: Point) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    fn of_segment(p: Point, q: Point) -> Bounds {
        let mut b = Bounds::EMPTY;
        b.include(p);
        b.include(q);
        b
    }

    fn overlaps(&self, other: &Bounds) -> bool {
        self.min.x <= other.max.x && other.min.x <= self.max.x && self.min.y <= other.max.y && other.min.y <= self.max.y
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("boundary tracing revisited the directed edge at ({x}, {y}) without closing")]
    Topology { x: i64, y: i64 },
    #[error("boundary vertex ({x}, {y}) is not among the supplied corners")]
    UnknownCorner { x: i64, y: i64 },
    #[error("corner ({x}, {y}) does not lie on any traced boundary")]
    UnusedCorner { x: i64, y: i64 },
    #[error("malformed polygon file, line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Grid(#[from] GridError),
}

impl From<GeometryError> for std::io::Error {
    fn from(e: GeometryError) -> Self {
        std::io::Error::new(std::io::ErrorKind::InvalidData, e)
    }
}

/// Obstacle polygons with cached bounding boxes.
#[derive(Clone, Debug, PartialEq)]
pub struct ObstacleSet {
    polygons: Vec<Polygon>,
    bounds: Vec<Bounds>,
}

// Lattice directions east, south, west, north in y-down screen coordinates;
// `(d + 1) % 4` is a right turn.
const STEP: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

/// Boundary edges leaving lattice vertex `(i, j)` with occupied on the right.
fn outgoing(grid: &OccupancyGrid, i: i64, j: i64) -> [bool; 4] {
    let [nw, ne, sw, se] = window(grid, i, j);
    [se && !ne, sw && !se, nw && !sw, ne && !nw]
}

/// Links corners into boundary cycles by following lattice boundary edges
/// with the occupied side on the right (crack following, the edge-based form
/// of Moore-neighbor tracing). Where two boundaries touch at a saddle vertex
/// the trace takes the right turn, which keeps diagonally touching obstacles
/// in separate polygons. A cycle stops when it re-enters its starting edge in
/// the same direction (Jacob's criterion).
pub fn connect_polygon(grid: &OccupancyGrid, corners: &CornerSet) -> Result<ObstacleSet, GeometryError> {
    let vw = grid.width() as i64 + 1;
    let vh = grid.height() as i64 + 1;
    let slot = |i: i64, j: i64, d: usize| ((j * vw + i) as usize) * 4 + d;
    let mut visited = vec![false; (vw * vh) as usize * 4];
    let mut polygons = Vec::new();
    let mut used_corners = vec![false; corners.len()];

    for j in 0..vh {
        for i in 0..vw {
            let out = outgoing(grid, i, j);
            for d0 in 0..4 {
                if !out[d0] || visited[slot(i, j, d0)] {
                    continue;
                }
                // (vertex, outgoing direction) for every unit edge of the cycle
                let mut cycle: Vec<(i64, i64, usize)> = Vec::new();
                let (mut x, mut y, mut d) = (i, j, d0);
                loop {
                    visited[slot(x, y, d)] = true;
                    cycle.push((x, y, d));
                    x += STEP[d].0;
                    y += STEP[d].1;
                    let avail = outgoing(grid, x, y);
                    let right = (d + 1) % 4;
                    let left = (d + 3) % 4;
                    let next = [right, d, left]
                        .into_iter()
                        .find(|&c| avail[c])
                        .ok_or(GeometryError::Topology { x, y })?;
                    if x == i && y == j && next == d0 {
                        break;
                    }
                    if visited[slot(x, y, next)] {
                        return Err(GeometryError::Topology { x, y });
                    }
                    d = next;
                }

                let n = cycle.len();
                let mut vertices = Vec::new();
                for k in 0..n {
                    let (vx, vy, dir) = cycle[k];
                    let incoming = cycle[(k + n - 1) % n].2;
                    if incoming == dir {
                        continue;
                    }
                    let [nw, ne, sw, se] = window(grid, vx, vy);
                    let saddle = nw == se && ne == sw && nw != ne;
                    if !saddle {
                        let idx = corners
                            .corners
                            .binary_search_by(|c| (c.y, c.x).cmp(&(vy, vx)))
                            .map_err(|_| GeometryError::UnknownCorner { x: vx, y: vy })?;
                        used_corners[idx] = true;
                    }
                    vertices.push(Point::new(vx as f64, vy as f64));
                }
                let mut poly = Polygon { vertices, inner: false };
                poly.inner = poly.signed_area() < 0.0;
                polygons.push(poly);
            }
        }
    }
    if let Some(k) = used_corners.iter().position(|u| !u) {
        let c = corners.corners[k];
        return Err(GeometryError::UnusedCorner { x: c.x, y: c.y });
    }
    Ok(ObstacleSet::new(polygons))
}

impl ObstacleSet {
    pub fn new(polygons: Vec<Polygon>) -> Self {
        let bounds = polygons.iter().map(Polygon::bounds).collect();
        Self { polygons, bounds }
    }

    /// Corner detection followed by boundary tracing.
    pub fn from_grid(grid: &OccupancyGrid) -> Result<Self, GeometryError> {
        connect_polygon(grid, &seek_corners(grid))
    }

    pub fn polygons(&self) -> &[Polygon] {
        &self.polygons
    }

    pub fn len(&self) -> usize {
        self.polygons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    /// Sum of signed polygon areas: the occupied area.
    pub fn total_area(&self) -> f64 {
        self.polygons.iter().map(Polygon::signed_area).sum()
    }

    /// Whether `p` lies in the interior of the obstacle region (even-odd rule
    /// over all boundaries). Points exactly on a boundary may go either way;
    /// use [`touches_boundary`](Self::touches_boundary) for those.
    pub fn contains_interior(&self, p: Point) -> bool {
        let mut inside = false;
        for (poly, b) in self.polygons.iter().zip(&self.bounds) {
            if p.y < b.min.y || p.y > b.max.y || p.x > b.max.x {
                continue;
            }
            for (a, c) in poly.edges() {
                if ray_crosses(p, a, c) {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Whether the closed segment `pq` meets any polygon boundary.
    pub fn touches_boundary(&self, p: Point, q: Point) -> bool {
        let sb = Bounds::of_segment(p, q);
        self.polygons
            .iter()
            .zip(&self.bounds)
            .filter(|(_, b)| b.overlaps(&sb))
            .any(|(poly, _)| poly.edges().any(|(a, c)| segments_intersect(p, q, a, c)))
    }

    /// Serializes one polygon per line as `x0,y0 x1,y1 ...`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for poly in &self.polygons {
            let parts: Vec<String> = poly.vertices.iter().map(|v| format!("{},{}", v.x, v.y)).collect();
            let _ = writeln!(out, "{}", parts.join(" "));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, GeometryError> {
        let mut polygons = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let vertices = line
                .split_whitespace()
                .map(|tok| tok.parse::<Point>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|reason| GeometryError::Parse { line: n + 1, reason })?;
            if vertices.len() < 3 {
                return Err(GeometryError::Parse {
                    line: n + 1,
                    reason: "a polygon needs at least three vertices".into(),
                });
            }
            let mut poly = Polygon { vertices, inner: false };
            poly.inner = poly.signed_area() < 0.0;
            polygons.push(poly);
        }
        Ok(Self::new(polygons))
    }
}

/// True iff the closed segment `pq` meets the interior or boundary of any
/// obstacle polygon.
pub fn segment_collides(p: Point, q: Point, obstacles: &ObstacleSet) -> bool {
    // A segment that crosses no boundary lies entirely inside or outside.
    obstacles.touches_boundary(p, q) || obstacles.contains_interior(p)
}

/// True iff the cell containing `p` (floor rule) is free.
pub fn point_in_free(p: Point, grid: &OccupancyGrid) -> Result<bool, GeometryError> {
    let (x, y) = grid.cell_of(p)?;
    Ok(grid.is_free(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::{generate_dungeon, GenParams};

    fn open_room(n: usize, blocked: impl Fn(usize, usize) -> bool) -> OccupancyGrid {
        OccupancyGrid::from_fn(n, n, |x, y| x > 0 && y > 0 && x < n - 1 && y < n - 1 && !blocked(x, y)).unwrap()
    }

    /// Polygons that belong to neither the outer frame nor the frame's hole.
    fn island_polygons(grid: &OccupancyGrid, obs: &ObstacleSet) -> Vec<Polygon> {
        let touches_frame = |p: &Polygon| {
            p.vertices.iter().any(|v| {
                v.x <= 1.0 || v.y <= 1.0 || v.x >= grid.width() as f64 - 1.0 || v.y >= grid.height() as f64 - 1.0
            })
        };
        obs.polygons().iter().filter(|p| !touches_frame(p)).cloned().collect()
    }

    fn brute_corners(grid: &OccupancyGrid) -> Vec<(i64, i64)> {
        let occ = |x: i64, y: i64| {
            x >= 0
                && y >= 0
                && x < grid.width() as i64
                && y < grid.height() as i64
                && !grid.is_free(x as usize, y as usize)
        };
        let mut out = Vec::new();
        for j in 0..=grid.height() as i64 {
            for i in 0..=grid.width() as i64 {
                let n = [occ(i - 1, j - 1), occ(i, j - 1), occ(i - 1, j), occ(i, j)]
                    .iter()
                    .filter(|&&b| b)
                    .count();
                if n % 2 == 1 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    #[test]
    fn rectangle_corners() {
        // 4x6 block in an open 20x20 room.
        let g = open_room(20, |x, y| (5..9).contains(&x) && (6..12).contains(&y));
        let cs = seek_corners(&g);
        // outer frame (4) + inside of the frame (4) + block (4)
        assert_eq!(cs.len(), 12);
        let block: Vec<_> = cs
            .corners
            .iter()
            .filter(|c| (5..=9).contains(&c.x) && (6..=12).contains(&c.y))
            .map(|c| (c.x, c.y, c.convex))
            .collect();
        assert_eq!(block, vec![(5, 6, true), (9, 6, true), (5, 12, true), (9, 12, true)]);
    }

    #[test]
    fn l_shape_has_six_corners() {
        let g = open_room(20, |x, y| {
            ((4..10).contains(&x) && (4..6).contains(&y)) || ((4..6).contains(&x) && (4..12).contains(&y))
        });
        let cs = seek_corners(&g);
        assert_eq!(cs.len(), 8 + 6);
        let obs = connect_polygon(&g, &cs).unwrap();
        let islands = island_polygons(&g, &obs);
        assert_eq!(islands.len(), 1);
        assert_eq!(islands[0].vertices.len(), 6);
        assert_eq!(islands[0].signed_area(), 6.0 * 2.0 + 2.0 * 6.0);
    }

    #[test]
    fn disjoint_rectangles_match_window_brute_force() {
        let rects = [(3, 3, 4, 2), (10, 4, 3, 5), (4, 12, 6, 3), (14, 14, 2, 2)];
        let g = open_room(24, |x, y| {
            rects
                .iter()
                .any(|&(rx, ry, w, h)| x >= rx && x < rx + w && y >= ry && y < ry + h)
        });
        let cs = seek_corners(&g);
        assert_eq!(cs.len(), 8 + 4 * rects.len());
        let got: Vec<_> = cs.corners.iter().map(|c| (c.x, c.y)).collect();
        assert_eq!(got, brute_corners(&g));

        let obs = connect_polygon(&g, &cs).unwrap();
        let islands = island_polygons(&g, &obs);
        assert_eq!(islands.len(), rects.len());
        for p in &islands {
            assert_eq!(p.vertices.len(), 4);
            assert!(!p.inner);
        }
    }

    #[test]
    fn rectangle_polygon_in_boundary_order() {
        let g = open_room(12, |x, y| (4..7).contains(&x) && (5..7).contains(&y));
        let obs = ObstacleSet::from_grid(&g).unwrap();
        let islands = island_polygons(&g, &obs);
        assert_eq!(islands.len(), 1);
        let v: Vec<(f64, f64)> = islands[0].vertices.iter().map(|p| (p.x, p.y)).collect();
        assert_eq!(v, vec![(4.0, 5.0), (7.0, 5.0), (7.0, 7.0), (4.0, 7.0)]);
        // frame outline + frame hole + block
        assert_eq!(obs.len(), 3);
        assert_eq!(obs.polygons().iter().filter(|p| p.inner).count(), 1);
    }

    #[test]
    fn all_occupied_grid_is_border_only() {
        let g = OccupancyGrid::filled(5, 4).unwrap();
        let cs = seek_corners(&g);
        let pts: Vec<_> = cs.corners.iter().map(|c| (c.x, c.y)).collect();
        assert_eq!(pts, vec![(0, 0), (5, 0), (0, 4), (5, 4)]);
        let obs = connect_polygon(&g, &cs).unwrap();
        assert_eq!(obs.len(), 1);
        assert_eq!(obs.total_area(), 20.0);
    }

    #[test]
    fn hole_inside_island_is_flagged_inner() {
        // ring-shaped island with a free center
        let g = open_room(14, |x, y| {
            (3..10).contains(&x) && (3..10).contains(&y) && !((5..8).contains(&x) && (5..8).contains(&y))
        });
        let obs = ObstacleSet::from_grid(&g).unwrap();
        assert_eq!(obs.len(), 4);
        assert_eq!(obs.polygons().iter().filter(|p| p.inner).count(), 2);
        assert_eq!(obs.total_area(), g.occupied_count() as f64);
        assert!(!segment_collides(Point::new(6.5, 6.5), Point::new(6.5, 6.5), &obs));
        assert!(segment_collides(Point::new(6.5, 6.5), Point::new(1.5, 6.5), &obs));
    }

    #[test]
    fn shoelace_matches_cell_count_on_generated_maps() {
        for seed in 0..30 {
            let g = generate_dungeon(&GenParams::default().with_seed(seed)).unwrap();
            let obs = ObstacleSet::from_grid(&g).unwrap();
            assert_eq!(obs.total_area(), g.occupied_count() as f64, "seed {seed}");
        }
    }

    #[test]
    fn diagonal_contact_splits_polygons() {
        let g = OccupancyGrid::from_ascii(
            "########
             #......#
             #.#....#
             #..#...#
             #......#
             ########",
        )
        .unwrap();
        let obs = ObstacleSet::from_grid(&g).unwrap();
        let islands = island_polygons(&g, &obs);
        assert_eq!(islands.len(), 2);
        // the segment through the shared corner point touches both cells
        assert!(segment_collides(Point::new(2.5, 3.5), Point::new(3.5, 2.5), &obs));
    }

    #[test]
    fn mismatched_corners_are_rejected() {
        let g = open_room(10, |x, y| x == 4 && y == 4);
        let other = open_room(10, |x, y| x == 6 && y == 6);
        let err = connect_polygon(&g, &seek_corners(&other)).unwrap_err();
        assert!(matches!(err, GeometryError::UnknownCorner { .. }));
    }

    #[test]
    fn segment_cases() {
        let g = open_room(12, |x, y| (4..7).contains(&x) && (4..7).contains(&y));
        let obs = ObstacleSet::from_grid(&g).unwrap();
        // inside the room, clear of the block
        assert!(!segment_collides(Point::new(1.5, 1.5), Point::new(10.5, 1.5), &obs));
        // midpoint inside the block
        assert!(segment_collides(Point::new(2.5, 5.5), Point::new(8.5, 5.5), &obs));
        // grazing the block's top-left corner (4, 4) counts
        assert!(segment_collides(Point::new(3.0, 5.0), Point::new(5.0, 3.0), &obs));
        assert!(!segment_collides(Point::new(3.0, 4.9), Point::new(4.9, 3.0), &obs));
        // entirely inside the block
        assert!(segment_collides(Point::new(5.0, 5.0), Point::new(5.5, 5.5), &obs));
        // into the frame
        assert!(segment_collides(Point::new(1.5, 1.5), Point::new(0.5, 0.5), &obs));
    }

    #[test]
    fn point_in_free_floor_rule() {
        let g = open_room(6, |x, y| x == 3 && y == 2);
        assert!(point_in_free(Point::new(1.5, 1.5), &g).unwrap());
        assert!(!point_in_free(Point::new(3.5, 2.5), &g).unwrap());
        // (3.0, 2.5) sits on the edge between free (2,2) and occupied (3,2)
        assert!(!point_in_free(Point::new(3.0, 2.5), &g).unwrap());
        assert!(point_in_free(Point::new(2.999, 2.5), &g).unwrap());
        assert!(matches!(
            point_in_free(Point::new(6.0, 1.0), &g),
            Err(GeometryError::Grid(GridError::OutOfBounds { .. }))
        ));
    }

    #[test]
    fn text_round_trip() {
        let g = generate_dungeon(&GenParams::default().with_seed(5)).unwrap();
        let obs = ObstacleSet::from_grid(&g).unwrap();
        let back = ObstacleSet::parse(&obs.to_text()).unwrap();
        assert_eq!(back, obs);
        assert!(ObstacleSet::parse("1,1 2,2\n").is_err());
        assert!(ObstacleSet::parse("1,1 2,x 3,3\n").is_err());
    }
}
