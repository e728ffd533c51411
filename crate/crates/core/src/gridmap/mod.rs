//! Occupancy grids: the binary workspace every other module plans over.
//!
//! Submodules add procedural dungeon generation ([`dungeon`]), the exact
//! Euclidean distance transform ([`clearance`]) and PGM/PNG map I/O ([`io`]).

pub mod clearance;
pub mod dungeon;
pub mod io;

use std::collections::VecDeque;

use thiserror::Error;

use crate::point::Point;

pub use clearance::{distance_transform, ClearanceField};
pub use dungeon::{generate_dungeon, GenParams};
pub use io::{load_map, save_map, MapFormat, MapMeta};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cell {
    Free,
    Occupied,
}

impl Cell {
    pub fn is_free(self) -> bool {
        self == Cell::Free
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid dimensions must be positive, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },
    #[error("cell array has {got} entries, expected {expected} for {width}x{height}")]
    LengthMismatch {
        width: usize,
        height: usize,
        expected: usize,
        got: usize,
    },
    #[error("border cell ({x}, {y}) is free; maps must be closed workspaces")]
    OpenBorder { x: usize, y: usize },
    #[error("point {x},{y} lies outside the {width}x{height} grid")]
    OutOfBounds {
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },
}

/// Binary workspace map, row-major, with every border cell occupied.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OccupancyGrid {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
}

impl OccupancyGrid {
    pub fn new(width: usize, height: usize, cells: Vec<Cell>) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::EmptyDimensions { width, height });
        }
        if cells.len() != width * height {
            return Err(GridError::LengthMismatch {
                width,
                height,
                expected: width * height,
                got: cells.len(),
            });
        }
        let grid = Self { width, height, cells };
        if let Some((x, y)) = grid.border_cells().find(|&(x, y)| grid.get(x, y).is_free()) {
            return Err(GridError::OpenBorder { x, y });
        }
        Ok(grid)
    }

    /// All cells occupied.
    pub fn filled(width: usize, height: usize) -> Result<Self, GridError> {
        Self::new(width, height, vec![Cell::Occupied; width * height])
    }

    /// Builds a grid from a predicate over cell coordinates; `true` means free.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut is_free: impl FnMut(usize, usize) -> bool,
    ) -> Result<Self, GridError> {
        let mut cells = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                cells.push(if is_free(x, y) { Cell::Free } else { Cell::Occupied });
            }
        }
        Self::new(width, height, cells)
    }

    /// Parses an ASCII picture: `#` occupied, `.` free, one row per line.
    /// Handy for fixtures.
    pub fn from_ascii(art: &str) -> Result<Self, GridError> {
        let rows: Vec<&str> = art.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let mut cells = Vec::with_capacity(width * height);
        for row in &rows {
            for ch in row.chars() {
                cells.push(if ch == '.' { Cell::Free } else { Cell::Occupied });
            }
        }
        Self::new(width, height, cells)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn get(&self, x: usize, y: usize) -> Cell {
        self.cells[self.index(x, y)]
    }

    pub fn is_free(&self, x: usize, y: usize) -> bool {
        self.get(x, y).is_free()
    }

    /// Like [`is_free`](Self::is_free) but treats anything outside the grid as occupied.
    pub fn is_free_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.is_free(x as usize, y as usize)
    }

    /// Cell containing a continuous point, using the floor rule: a point on a
    /// shared cell edge belongs to the cell with the larger index.
    pub fn cell_of(&self, p: Point) -> Result<(usize, usize), GridError> {
        let out = || GridError::OutOfBounds {
            x: p.x,
            y: p.y,
            width: self.width,
            height: self.height,
        };
        if !p.is_finite() {
            return Err(out());
        }
        let (fx, fy) = (p.x.floor(), p.y.floor());
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return Err(out());
        }
        Ok((fx as usize, fy as usize))
    }

    /// Occupancy at a continuous point; outside the grid counts as occupied.
    pub fn is_free_at(&self, p: Point) -> bool {
        self.cell_of(p).is_ok_and(|(x, y)| self.is_free(x, y))
    }

    pub fn free_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_free()).count()
    }

    pub fn occupied_count(&self) -> usize {
        self.len() - self.free_count()
    }

    /// Coordinates of all free cells in row-major order.
    pub fn free_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.height)
            .flat_map(move |y| (0..self.width).map(move |x| (x, y)))
            .filter(move |&(x, y)| self.is_free(x, y))
    }

    fn border_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (w, h) = (self.width, self.height);
        (0..w)
            .flat_map(move |x| [(x, 0), (x, h - 1)])
            .chain((0..h).flat_map(move |y| [(0, y), (w - 1, y)]))
    }

    /// Labels 4-connected free components. Returns per-cell labels (`None`
    /// for occupied cells) and the component count.
    pub fn free_components(&self) -> (Vec<Option<usize>>, usize) {
        let mut labels = vec![None; self.len()];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for start in 0..self.len() {
            if !self.cells[start].is_free() || labels[start].is_some() {
                continue;
            }
            labels[start] = Some(count);
            queue.push_back(start);
            while let Some(i) = queue.pop_front() {
                let (x, y) = (i % self.width, i / self.width);
                let neighbors = [(x.wrapping_sub(1), y), (x + 1, y), (x, y.wrapping_sub(1)), (x, y + 1)];
                for (nx, ny) in neighbors {
                    if nx < self.width && ny < self.height {
                        let j = self.index(nx, ny);
                        if self.cells[j].is_free() && labels[j].is_none() {
                            labels[j] = Some(count);
                            queue.push_back(j);
                        }
                    }
                }
            }
            count += 1;
        }
        (labels, count)
    }

    pub fn free_component_count(&self) -> usize {
        self.free_components().1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_open_border() {
        let err = OccupancyGrid::from_fn(4, 4, |x, _| x == 0).unwrap_err();
        assert!(matches!(err, GridError::OpenBorder { x: 0, .. }));
    }

    #[test]
    fn rejects_length_mismatch() {
        let err = OccupancyGrid::new(3, 3, vec![Cell::Occupied; 8]).unwrap_err();
        assert!(matches!(
            err,
            GridError::LengthMismatch {
                expected: 9,
                got: 8,
                ..
            }
        ));
    }

    #[test]
    fn floor_rule_on_cell_edges() {
        let g = OccupancyGrid::from_ascii(
            "####
             #..#
             ####",
        )
        .unwrap();
        assert_eq!(g.cell_of(Point::new(2.0, 1.5)).unwrap(), (2, 1));
        assert!(g.is_free_at(Point::new(1.5, 1.5)));
        assert!(!g.is_free_at(Point::new(3.0, 1.5)));
        assert!(g.cell_of(Point::new(4.0, 1.0)).is_err());
        assert!(g.cell_of(Point::new(-0.1, 1.0)).is_err());
    }

    #[test]
    fn counts_components() {
        let g = OccupancyGrid::from_ascii(
            "#######
             #..#..#
             #..#..#
             #######",
        )
        .unwrap();
        assert_eq!(g.free_component_count(), 2);
        // diagonal contact does not join 4-connected components
        let g = OccupancyGrid::from_ascii(
            "####
             #.##
             ##.#
             ####",
        )
        .unwrap();
        assert_eq!(g.free_component_count(), 2);
    }
}
