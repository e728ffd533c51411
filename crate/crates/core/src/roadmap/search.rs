use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;

use super::{Path, Query, RoadmapError};
use crate::gridmap::OccupancyGrid;
use crate::point::Point;

#[derive(Clone, Copy, PartialEq)]
struct Open {
    f: f64,
    node: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        self.f.total_cmp(&other.f).then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A* over nodes `0..n`. Among equal `f` the smaller node id expands first.
/// A node is re-expanded whenever a strictly cheaper route to it appears, so
/// the result stays optimal even if rounding makes the heuristic slightly
/// inconsistent. Returns the node sequence and its cost.
pub(crate) fn astar(
    n: usize,
    start: usize,
    goal: usize,
    mut neighbors: impl FnMut(usize, &mut Vec<(usize, f64)>),
    heuristic: impl Fn(usize) -> f64,
) -> Option<(Vec<usize>, f64)> {
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    let mut scratch = Vec::new();
    g[start] = 0.0;
    heap.push(Reverse(Open {
        f: heuristic(start),
        node: start,
    }));
    while let Some(Reverse(Open { f, node })) = heap.pop() {
        if f > g[node] + heuristic(node) {
            continue; // stale entry
        }
        if node == goal {
            let mut seq = vec![goal];
            while let Some(&last) = seq.last() {
                if last == start {
                    break;
                }
                seq.push(parent[last]);
            }
            seq.reverse();
            return Some((seq, g[goal]));
        }
        scratch.clear();
        neighbors(node, &mut scratch);
        for &(next, w) in &scratch {
            let cand = g[node] + w;
            if cand < g[next] {
                g[next] = cand;
                parent[next] = node;
                heap.push(Reverse(Open {
                    f: cand + heuristic(next),
                    node: next,
                }));
            }
        }
    }
    None
}

const MOVES: [(i64, i64, f64); 8] = [
    (1, 0, 1.0),
    (-1, 0, 1.0),
    (0, 1, 1.0),
    (0, -1, 1.0),
    (1, 1, SQRT_2),
    (1, -1, SQRT_2),
    (-1, 1, SQRT_2),
    (-1, -1, SQRT_2),
];

/// 8-connected grid A* between the cells containing the query points.
///
/// Straight moves cost 1 and diagonal moves √2; a diagonal move needs both
/// orthogonal neighbors free. Waypoints are cell centers, with the exact query
/// points added at either end when they are not centers themselves.
pub fn grid_astar(grid: &OccupancyGrid, query: &Query) -> Result<Path, RoadmapError> {
    let (sx, sy) = grid.cell_of(query.start)?;
    let (gx, gy) = grid.cell_of(query.goal)?;
    if !grid.is_free(sx, sy) {
        return Err(RoadmapError::QueryNotFree(query.start));
    }
    if !grid.is_free(gx, gy) {
        return Err(RoadmapError::QueryNotFree(query.goal));
    }
    let w = grid.width();
    let octile = |i: usize| {
        let dx = (i % w).abs_diff(gx) as f64;
        let dy = (i / w).abs_diff(gy) as f64;
        dx.max(dy) + (SQRT_2 - 1.0) * dx.min(dy)
    };
    let neighbors = |i: usize, out: &mut Vec<(usize, f64)>| {
        let (x, y) = ((i % w) as i64, (i / w) as i64);
        for (dx, dy, cost) in MOVES {
            let (nx, ny) = (x + dx, y + dy);
            if !grid.is_free_signed(nx, ny) {
                continue;
            }
            if dx != 0 && dy != 0 && !(grid.is_free_signed(x + dx, y) && grid.is_free_signed(x, y + dy)) {
                continue;
            }
            out.push((ny as usize * w + nx as usize, cost));
        }
    };
    let (cells, _) =
        astar(grid.len(), grid.index(sx, sy), grid.index(gx, gy), neighbors, octile).ok_or(RoadmapError::NoPath)?;

    let mut waypoints = Vec::with_capacity(cells.len() + 2);
    if query.start != Point::cell_center(sx, sy) {
        waypoints.push(query.start);
    }
    waypoints.extend(cells.iter().map(|&i| Point::cell_center(i % w, i / w)));
    if query.goal != Point::cell_center(gx, gy) && waypoints.last() != Some(&query.goal) {
        waypoints.push(query.goal);
    }
    Ok(Path::new(waypoints))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmap::{generate_dungeon, GenParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn open(n: usize) -> OccupancyGrid {
        OccupancyGrid::from_fn(n, n, |x, y| x > 0 && y > 0 && x < n - 1 && y < n - 1).unwrap()
    }

    /// Uniform-cost search on the same move rules, written independently
    /// with a sorted frontier instead of a heap.
    fn ucs_cost(grid: &OccupancyGrid, s: (usize, usize), t: (usize, usize)) -> Option<f64> {
        let mut dist = vec![f64::INFINITY; grid.len()];
        let mut done = vec![false; grid.len()];
        dist[grid.index(s.0, s.1)] = 0.0;
        loop {
            let cur = (0..grid.len())
                .filter(|&i| !done[i] && dist[i].is_finite())
                .min_by(|&a, &b| dist[a].total_cmp(&dist[b]))?;
            if cur == grid.index(t.0, t.1) {
                return Some(dist[cur]);
            }
            done[cur] = true;
            let (x, y) = ((cur % grid.width()) as i64, (cur / grid.width()) as i64);
            for dx in -1i64..=1 {
                for dy in -1i64..=1 {
                    if (dx, dy) == (0, 0) || !grid.is_free_signed(x + dx, y + dy) {
                        continue;
                    }
                    let diagonal = dx != 0 && dy != 0;
                    if diagonal && (!grid.is_free_signed(x + dx, y) || !grid.is_free_signed(x, y + dy)) {
                        continue;
                    }
                    let j = grid.index((x + dx) as usize, (y + dy) as usize);
                    let c = dist[cur] + if diagonal { 2f64.sqrt() } else { 1.0 };
                    if c < dist[j] {
                        dist[j] = c;
                    }
                }
            }
        }
    }

    #[test]
    fn open_map_diagonal() {
        let g = open(10);
        let q = Query::new(Point::cell_center(1, 1), Point::cell_center(6, 6));
        let p = grid_astar(&g, &q).unwrap();
        assert!((p.length - 5.0 * SQRT_2).abs() < 1e-9);
        assert_eq!(p.waypoints.len(), 6);
    }

    #[test]
    fn walled_off_start() {
        let g = OccupancyGrid::from_ascii(
            "#######
             #.#...#
             #######",
        )
        .unwrap();
        let q = Query::new(Point::cell_center(1, 1), Point::cell_center(5, 1));
        assert_eq!(grid_astar(&g, &q).unwrap_err(), RoadmapError::NoPath);
    }

    #[test]
    fn no_corner_cutting() {
        let g = OccupancyGrid::from_ascii(
            "#####
             #..##
             ##..#
             #####",
        )
        .unwrap();
        let q = Query::new(Point::cell_center(1, 1), Point::cell_center(3, 2));
        let p = grid_astar(&g, &q).unwrap();
        // the diagonal (2,1)->(3,2) is blocked by (3,1) so the route goes (2,2)
        assert!((p.length - 3.0).abs() < 1e-12);
    }

    #[test]
    fn off_center_endpoints_are_kept() {
        let g = open(8);
        let q = Query::new(Point::new(1.2, 1.7), Point::new(4.9, 1.5));
        let p = grid_astar(&g, &q).unwrap();
        assert_eq!(p.waypoints.first(), Some(&q.start));
        assert_eq!(p.waypoints.last(), Some(&q.goal));
    }

    #[test]
    fn matches_uniform_cost_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for seed in 0..50 {
            let g = generate_dungeon(&GenParams {
                width: 32,
                height: 32,
                room_count: 2..=4,
                room_size: 5..=9,
                corridor_width: 1,
                ..GenParams::default().with_seed(seed)
            })
            .unwrap();
            let free: Vec<_> = g.free_cells().collect();
            let s = free[rng.random_range(0..free.len())];
            let t = free[rng.random_range(0..free.len())];
            let q = Query::new(Point::cell_center(s.0, s.1), Point::cell_center(t.0, t.1));
            let p = grid_astar(&g, &q).unwrap();
            let oracle = ucs_cost(&g, s, t).unwrap();
            assert!(
                (p.length - oracle).abs() < 1e-9,
                "seed {seed}: {} vs {oracle}",
                p.length
            );
        }
    }
}
