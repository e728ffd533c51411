//! Room-and-corridor map generator.
//!
//! The interior is recursively split with a binary space partition until the
//! requested number of leaves exists, one room is placed inside every leaf,
//! and sibling subtrees are joined by L-shaped corridors between their closest
//! room centers. Every room is reachable through the tree, so the free space
//! is a single 4-connected component.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::OccupancyGrid;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenParams {
    pub width: usize,
    pub height: usize,
    pub room_count: RangeInclusive<usize>,
    pub room_size: RangeInclusive<usize>,
    pub corridor_width: usize,
    pub seed: u64,
    /// Attempts with derived seeds before giving up.
    pub retry_budget: u32,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            room_count: 4..=8,
            room_size: 7..=16,
            corridor_width: 3,
            seed: 0,
            retry_budget: 64,
        }
    }
}

impl GenParams {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |what: &str| Err(GenError::InvalidParams(what.to_string()));
        if self.width < 3 || self.height < 3 {
            return bad("map must be at least 3x3");
        }
        if self.room_count.is_empty() || *self.room_count.start() == 0 {
            return bad("room_count range must be nonempty and start at 1 or more");
        }
        if self.room_size.is_empty() || *self.room_size.start() == 0 {
            return bad("room_size range must be nonempty and start at 1 or more");
        }
        if self.corridor_width == 0 {
            return bad("corridor_width must be at least 1");
        }
        if self.retry_budget == 0 {
            return bad("retry_budget must be at least 1");
        }
        Ok(())
    }

    /// Key/value pairs written to the `.meta` sidecar.
    pub fn to_meta(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("width".into(), self.width.to_string());
        m.insert("height".into(), self.height.to_string());
        m.insert(
            "room_count".into(),
            format!("{}..{}", self.room_count.start(), self.room_count.end()),
        );
        m.insert(
            "room_size".into(),
            format!("{}..{}", self.room_size.start(), self.room_size.end()),
        );
        m.insert("corridor_width".into(), self.corridor_width.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("retry_budget".into(), self.retry_budget.to_string());
        m
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),
    #[error("could not place rooms satisfying the parameters within a retry budget of {budget} attempts")]
    GenerationFailure { budget: u32 },
}

#[derive(Clone, Copy, Debug)]
struct Rect {
    x: usize,
    y: usize,
    w: usize,
    h: usize,
}

impl Rect {
    fn center(&self) -> (usize, usize) {
        (self.x + self.w / 2, self.y + self.h / 2)
    }
}

enum Node {
    Leaf(Rect),
    Split(usize, usize),
}

pub fn generate_dungeon(params: &GenParams) -> Result<OccupancyGrid, GenError> {
    params.validate()?;
    for attempt in 0..params.retry_budget {
        let seed = params
            .seed
            .wrapping_add((attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let Some(grid) = try_generate(params, &mut rng) {
            return Ok(grid);
        }
    }
    Err(GenError::GenerationFailure {
        budget: params.retry_budget,
    })
}

fn try_generate(params: &GenParams, rng: &mut ChaCha8Rng) -> Option<OccupancyGrid> {
    let (w, h) = (params.width, params.height);
    let min_room = *params.room_size.start();
    let max_room = *params.room_size.end();
    // Each leaf keeps a one-cell wall on every side of its room.
    let min_leaf = min_room + 2;
    let target = rng.random_range(params.room_count.clone());

    let mut nodes = vec![Node::Leaf(Rect {
        x: 1,
        y: 1,
        w: w - 2,
        h: h - 2,
    })];
    let mut leaves = vec![0usize];
    while leaves.len() < target {
        let pick = leaves
            .iter()
            .enumerate()
            .filter_map(|(slot, &id)| match nodes[id] {
                Node::Leaf(r) if r.w >= 2 * min_leaf || r.h >= 2 * min_leaf => Some((slot, id, r)),
                _ => None,
            })
            .max_by_key(|&(slot, _, r)| (r.w * r.h, std::cmp::Reverse(slot)));
        let Some((slot, id, r)) = pick else { break };
        let split_vertical = if r.w >= 2 * min_leaf && r.h >= 2 * min_leaf {
            if r.w == r.h {
                rng.random_bool(0.5)
            } else {
                r.w > r.h
            }
        } else {
            r.w >= 2 * min_leaf
        };
        let (a, b) = if split_vertical {
            let cut = rng.random_range(min_leaf..=r.w - min_leaf);
            (
                Rect { w: cut, ..r },
                Rect {
                    x: r.x + cut,
                    w: r.w - cut,
                    ..r
                },
            )
        } else {
            let cut = rng.random_range(min_leaf..=r.h - min_leaf);
            (
                Rect { h: cut, ..r },
                Rect {
                    y: r.y + cut,
                    h: r.h - cut,
                    ..r
                },
            )
        };
        let ia = nodes.len();
        nodes.push(Node::Leaf(a));
        nodes.push(Node::Leaf(b));
        nodes[id] = Node::Split(ia, ia + 1);
        leaves.swap_remove(slot);
        leaves.push(ia);
        leaves.push(ia + 1);
    }
    if leaves.len() < *params.room_count.start() {
        return None;
    }

    let mut free = vec![false; w * h];
    let mut rooms: Vec<Option<Rect>> = vec![None; nodes.len()];
    for id in 0..nodes.len() {
        let Node::Leaf(leaf) = nodes[id] else { continue };
        let avail_w = leaf.w.checked_sub(2)?;
        let avail_h = leaf.h.checked_sub(2)?;
        if avail_w < min_room || avail_h < min_room {
            return None;
        }
        let rw = rng.random_range(min_room..=max_room.min(avail_w));
        let rh = rng.random_range(min_room..=max_room.min(avail_h));
        let rx = leaf.x + 1 + rng.random_range(0..=avail_w - rw);
        let ry = leaf.y + 1 + rng.random_range(0..=avail_h - rh);
        let room = Rect {
            x: rx,
            y: ry,
            w: rw,
            h: rh,
        };
        for y in ry..ry + rh {
            for x in rx..rx + rw {
                free[y * w + x] = true;
            }
        }
        rooms[id] = Some(room);
    }

    let mut carver = Carver {
        free: &mut free,
        width: w,
        height: h,
        corridor_width: params.corridor_width,
    };
    connect(&nodes, &rooms, 0, rng, &mut carver);

    let grid = OccupancyGrid::from_fn(w, h, |x, y| free[y * w + x]).ok()?;
    (grid.free_component_count() == 1).then_some(grid)
}

fn subtree_rooms(nodes: &[Node], rooms: &[Option<Rect>], id: usize, out: &mut Vec<Rect>) {
    match nodes[id] {
        Node::Leaf(_) => out.extend(rooms[id]),
        Node::Split(a, b) => {
            subtree_rooms(nodes, rooms, a, out);
            subtree_rooms(nodes, rooms, b, out);
        }
    }
}

fn connect(nodes: &[Node], rooms: &[Option<Rect>], id: usize, rng: &mut ChaCha8Rng, carver: &mut Carver<'_>) {
    let Node::Split(a, b) = nodes[id] else { return };
    connect(nodes, rooms, a, rng, carver);
    connect(nodes, rooms, b, rng, carver);

    let (mut left, mut right) = (Vec::new(), Vec::new());
    subtree_rooms(nodes, rooms, a, &mut left);
    subtree_rooms(nodes, rooms, b, &mut right);
    type Link = ((usize, usize), (usize, usize), usize);
    let mut best: Option<Link> = None;
    for l in &left {
        for r in &right {
            let (p, q) = (l.center(), r.center());
            let d = p.0.abs_diff(q.0).pow(2) + p.1.abs_diff(q.1).pow(2);
            if best.is_none_or(|(_, _, bd)| d < bd) {
                best = Some((p, q, d));
            }
        }
    }
    let Some((p, q, _)) = best else { return };
    if rng.random_bool(0.5) {
        carver.horizontal(p.1, p.0, q.0);
        carver.vertical(q.0, p.1, q.1);
    } else {
        carver.vertical(p.0, p.1, q.1);
        carver.horizontal(q.1, p.0, q.0);
    }
}

struct Carver<'a> {
    free: &'a mut [bool],
    width: usize,
    height: usize,
    corridor_width: usize,
}

impl Carver<'_> {
    fn band(&self, center: usize, limit: usize) -> std::ops::RangeInclusive<usize> {
        let lo = center.saturating_sub((self.corridor_width - 1) / 2).max(1);
        let hi = (center + self.corridor_width / 2).min(limit - 2);
        lo..=hi
    }

    fn horizontal(&mut self, y: usize, x0: usize, x1: usize) {
        let rows = self.band(y, self.height);
        let c0 = *self.band(x0.min(x1), self.width).start();
        let c1 = *self.band(x0.max(x1), self.width).end();
        for yy in rows {
            for xx in c0..=c1 {
                self.free[yy * self.width + xx] = true;
            }
        }
    }

    fn vertical(&mut self, x: usize, y0: usize, y1: usize) {
        let cols = self.band(x, self.width);
        let r0 = *self.band(y0.min(y1), self.height).start();
        let r1 = *self.band(y0.max(y1), self.height).end();
        for yy in r0..=r1 {
            for xx in cols.clone() {
                self.free[yy * self.width + xx] = true;
            }
        }
    }
}
