//! Shared fixtures and oracles for the integration tests.
#![allow(dead_code)]

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use skelroad::gridmap::{generate_dungeon, GenParams, OccupancyGrid};
use skelroad::roadmap::Roadmap;
use skelroad::Point;

pub fn dungeon(seed: u64) -> OccupancyGrid {
    generate_dungeon(&GenParams::default().with_seed(seed)).expect("default params generate")
}

/// Walks the segment in steps of at most `step` cells and reports whether any
/// visited point lands in an occupied cell.
pub fn supersampled_hit(grid: &OccupancyGrid, p: Point, q: Point, step: f64) -> bool {
    let n = (p.distance(q) / step).ceil().max(1.0) as usize;
    (0..=n).any(|i| !grid.is_free_at(p.lerp(q, i as f64 / n as f64)))
}

/// Plain Dijkstra over the stored roadmap edges, by vertex index.
pub fn dijkstra(map: &Roadmap, src: usize, dst: usize) -> Option<f64> {
    let n = map.vertex_count();
    let mut adj = vec![Vec::new(); n];
    for &(a, b, w) in map.edges() {
        adj[a].push((b, w));
        adj[b].push((a, w));
    }
    let mut dist = vec![f64::INFINITY; n];
    dist[src] = 0.0;
    // scaled integer keys avoid needing an Ord wrapper for f64
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(((0.0f64).to_bits(), src)));
    while let Some(Reverse((bits, v))) = heap.pop() {
        let d = f64::from_bits(bits);
        if d > dist[v] {
            continue;
        }
        if v == dst {
            return Some(d);
        }
        for &(u, w) in &adj[v] {
            let nd = d + w;
            if nd < dist[u] {
                dist[u] = nd;
                // non-negative f64 bit patterns order like the values
                heap.push(Reverse((nd.to_bits(), u)));
            }
        }
    }
    None
}

/// Cost of the cheapest 8-connected route without corner cutting, by
/// uniform-cost search with a linear scan for the frontier minimum.
pub fn ucs_cost(grid: &OccupancyGrid, s: (usize, usize), t: (usize, usize)) -> Option<f64> {
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
        for (dx, dy) in [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)] {
            if !grid.is_free_signed(x + dx, y + dy) {
                continue;
            }
            let diagonal = dx != 0 && dy != 0;
            if diagonal && !(grid.is_free_signed(x + dx, y) && grid.is_free_signed(x, y + dy)) {
                continue;
            }
            let j = grid.index((x + dx) as usize, (y + dy) as usize);
            dist[j] = dist[j].min(dist[cur] + if diagonal { 2f64.sqrt() } else { 1.0 });
        }
    }
}

/// Zhang-Suen thinning written from the rule text on a nested-vector image:
/// full rescans each sub-iteration, named neighbors p2..p9 clockwise from
/// north, everything off the image counted as background.
pub fn reference_thinning(grid: &OccupancyGrid) -> Vec<Vec<bool>> {
    let (w, h) = (grid.width() as i64, grid.height() as i64);
    let mut img: Vec<Vec<bool>> = (0..h)
        .map(|y| (0..w).map(|x| grid.is_free(x as usize, y as usize)).collect())
        .collect();
    let px = |img: &Vec<Vec<bool>>, x: i64, y: i64| -> u32 {
        (x >= 0 && y >= 0 && x < w && y < h && img[y as usize][x as usize]) as u32
    };
    loop {
        let mut changed = false;
        for first in [true, false] {
            let snap = img.clone();
            let mut kill = Vec::new();
            for y in 0..h {
                for x in 0..w {
                    if px(&snap, x, y) == 0 {
                        continue;
                    }
                    let n = [
                        px(&snap, x, y - 1),
                        px(&snap, x + 1, y - 1),
                        px(&snap, x + 1, y),
                        px(&snap, x + 1, y + 1),
                        px(&snap, x, y + 1),
                        px(&snap, x - 1, y + 1),
                        px(&snap, x - 1, y),
                        px(&snap, x - 1, y - 1),
                    ];
                    let [p2, _, p4, _, p6, _, p8, _] = n;
                    let b: u32 = n.iter().sum();
                    let a = (0..8).filter(|&i| n[i] == 0 && n[(i + 1) % 8] == 1).count();
                    let side = if first {
                        p2 * p4 * p6 == 0 && p4 * p6 * p8 == 0
                    } else {
                        p2 * p4 * p8 == 0 && p2 * p6 * p8 == 0
                    };
                    if (2..=6).contains(&b) && a == 1 && side {
                        kill.push((x as usize, y as usize));
                    }
                }
            }
            changed |= !kill.is_empty();
            for (x, y) in kill {
                img[y][x] = false;
            }
        }
        if !changed {
            return img;
        }
    }
}
