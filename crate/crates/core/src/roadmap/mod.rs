//! Skeleton roadmaps: graph construction from a skeleton mask (offline) and
//! query answering against the stored graph (online).
//!
//! The online stage never touches the [`Roadmap`]. [`connect_query`] returns a
//! [`QueryGraph`] overlay that borrows the roadmap and adds the two query
//! points plus their connecting edges, so one roadmap can serve any number of
//! concurrent queries.

mod kdtree;
mod search;

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{segment_collides, ObstacleSet};
use crate::gridmap::{GridError, OccupancyGrid};
use crate::point::Point;
use crate::skeleton::SkeletonMask;
pub use kdtree::KdTree;
pub use search::grid_astar;

pub const DEFAULT_K: usize = 6;
/// How many nearest vertices `connect_query` tries per endpoint.
pub const CONNECT_CANDIDATES: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum RoadmapError {
    #[error("skeleton has no pixel in free space")]
    EmptySkeleton,
    #[error("mask is {mask_w}x{mask_h} but the grid is {grid_w}x{grid_h}")]
    DimensionMismatch {
        mask_w: usize,
        mask_h: usize,
        grid_w: usize,
        grid_h: usize,
    },
    #[error("k_nearest must be at least 1")]
    InvalidK,
    #[error("query point {0} is not in free space")]
    QueryNotFree(Point),
    #[error("no roadmap vertex visible from the start within {CONNECT_CANDIDATES} candidates")]
    UnconnectableStart,
    #[error("no roadmap vertex visible from the goal within {CONNECT_CANDIDATES} candidates")]
    UnconnectableGoal,
    #[error("start and goal are not connected")]
    NoPath,
    #[error("roadmap text line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Query {
    pub start: Point,
    pub goal: Point,
}

impl Query {
    pub fn new(start: Point, goal: Point) -> Self {
        Self { start, goal }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub waypoints: Vec<Point>,
    pub length: f64,
}

impl Path {
    pub fn new(waypoints: Vec<Point>) -> Self {
        let length = waypoints.windows(2).map(|w| w[0].distance(w[1])).sum();
        Self { waypoints, length }
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.waypoints.windows(2).map(|w| (w[0], w[1]))
    }

    /// One `x y` line per waypoint.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for p in &self.waypoints {
            let _ = writeln!(s, "{} {}", p.x, p.y);
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, RoadmapError> {
        let mut waypoints = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: &str| RoadmapError::Parse {
                line: i + 1,
                reason: reason.into(),
            };
            let mut it = line.split_whitespace().map(str::parse::<f64>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(x)), Some(Ok(y)), None) => waypoints.push(Point::new(x, y)),
                _ => return Err(err("expected `x y`")),
            }
        }
        Ok(Self::new(waypoints))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    pub k_nearest: usize,
    /// Keep every `stride`-th skeleton pixel in row-major order; 1 keeps all.
    pub stride: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            k_nearest: DEFAULT_K,
            stride: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Roadmap {
    vertices: Vec<Point>,
    edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<(usize, f64)>>,
    index: KdTree,
}

impl PartialEq for Roadmap {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.edges == other.edges
    }
}

impl Roadmap {
    /// Assembles a roadmap from explicit parts. Edges are normalized to
    /// `(low, high)` and sorted; self-loops and duplicates are dropped.
    pub fn from_parts(vertices: Vec<Point>, edges: Vec<(usize, usize, f64)>) -> Self {
        let mut seen = BTreeSet::new();
        let mut clean = Vec::with_capacity(edges.len());
        for (a, b, w) in edges {
            assert!(a < vertices.len() && b < vertices.len(), "edge endpoint out of range");
            let key = (a.min(b), a.max(b));
            if key.0 != key.1 && seen.insert(key) {
                clean.push((key.0, key.1, w));
            }
        }
        clean.sort_by_key(|e| (e.0, e.1));
        let mut adjacency = vec![Vec::new(); vertices.len()];
        for &(a, b, w) in &clean {
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        let index = KdTree::new(&vertices);
        Self {
            vertices,
            edges: clean,
            adjacency,
            index,
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Indices of the `k` nearest vertices, closest first, ties by index.
    pub fn nearest(&self, p: Point, k: usize) -> Vec<usize> {
        self.index.nearest(p, k)
    }

    /// Hash over vertex coordinates and edges, used to show that queries leave
    /// the graph untouched.
    pub fn structural_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.vertices.len().hash(&mut h);
        for p in &self.vertices {
            p.x.to_bits().hash(&mut h);
            p.y.to_bits().hash(&mut h);
        }
        for &(a, b, w) in &self.edges {
            (a, b, w.to_bits()).hash(&mut h);
        }
        h.finish()
    }

    /// `V id x y` lines followed by `E id1 id2 weight` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, p) in self.vertices.iter().enumerate() {
            let _ = writeln!(s, "V {i} {} {}", p.x, p.y);
        }
        for &(a, b, w) in &self.edges {
            let _ = writeln!(s, "E {a} {b} {w}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, RoadmapError> {
        let mut vertices = Vec::new();
        let mut edges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let err = |reason: String| RoadmapError::Parse { line: i + 1, reason };
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                [] => {}
                ["V", id, x, y] => {
                    let id: usize = id.parse().map_err(|_| err(format!("bad vertex id {id:?}")))?;
                    if id != vertices.len() {
                        return Err(err(format!("vertex id {id} out of sequence")));
                    }
                    let x: f64 = x.parse().map_err(|_| err(format!("bad coordinate {x:?}")))?;
                    let y: f64 = y.parse().map_err(|_| err(format!("bad coordinate {y:?}")))?;
                    vertices.push(Point::new(x, y));
                }
                ["E", a, b, w] => {
                    let a: usize = a.parse().map_err(|_| err(format!("bad vertex id {a:?}")))?;
                    let b: usize = b.parse().map_err(|_| err(format!("bad vertex id {b:?}")))?;
                    let w: f64 = w.parse().map_err(|_| err(format!("bad weight {w:?}")))?;
                    if a >= vertices.len() || b >= vertices.len() {
                        return Err(err(format!("edge {a}-{b} references an unknown vertex")));
                    }
                    edges.push((a, b, w));
                }
                _ => return Err(err(format!("unrecognized line {line:?}"))),
            }
        }
        Ok(Self::from_parts(vertices, edges))
    }
}

/// Builds the roadmap: one vertex per free skeleton cell (at the cell
/// center) and an edge between every vertex and each of its `k` nearest
/// neighbors whenever the straight segment misses all obstacles.
pub fn build_graph(
    mask: &SkeletonMask,
    grid: &OccupancyGrid,
    obstacles: &ObstacleSet,
    options: BuildOptions,
) -> Result<Roadmap, RoadmapError> {
    if mask.width() != grid.width() || mask.height() != grid.height() {
        return Err(RoadmapError::DimensionMismatch {
            mask_w: mask.width(),
            mask_h: mask.height(),
            grid_w: grid.width(),
            grid_h: grid.height(),
        });
    }
    if options.k_nearest == 0 {
        return Err(RoadmapError::InvalidK);
    }
    let vertices: Vec<Point> = mask
        .pixels()
        .filter(|&(x, y)| grid.is_free(x, y))
        .step_by(options.stride.max(1))
        .map(|(x, y)| Point::cell_center(x, y))
        .collect();
    if vertices.is_empty() {
        return Err(RoadmapError::EmptySkeleton);
    }
    let index = KdTree::new(&vertices);
    let mut candidates = BTreeSet::new();
    for (i, &v) in vertices.iter().enumerate() {
        // +1 because the vertex itself comes back first
        for j in index.nearest(v, options.k_nearest + 1) {
            if j != i {
                candidates.insert((i.min(j), i.max(j)));
            }
        }
    }
    let candidates: Vec<(usize, usize)> = candidates.into_iter().collect();
    let edges: Vec<(usize, usize, f64)> = candidates
        .par_iter()
        .filter(|&&(a, b)| !segment_collides(vertices[a], vertices[b], obstacles))
        .map(|&(a, b)| (a, b, vertices[a].distance(vertices[b])))
        .collect();
    Ok(Roadmap::from_parts(vertices, edges))
}

/// How a query endpoint joins the roadmap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Attachment {
    /// The point coincides with this vertex.
    Vertex(usize),
    /// A new vertex linked to `vertex` by an edge of length `weight`.
    Edge { vertex: usize, weight: f64 },
}

impl Attachment {
    /// The roadmap vertex this endpoint hangs off.
    pub fn vertex(self) -> usize {
        match self {
            Attachment::Vertex(v) | Attachment::Edge { vertex: v, .. } => v,
        }
    }
}

/// A roadmap plus one query's endpoints, without copying the roadmap.
#[derive(Clone, Debug)]
pub struct QueryGraph<'a> {
    pub roadmap: &'a Roadmap,
    pub query: Query,
    pub start: Attachment,
    pub goal: Attachment,
}

fn attach(
    roadmap: &Roadmap,
    p: Point,
    obstacles: &ObstacleSet,
    fail: RoadmapError,
) -> Result<Attachment, RoadmapError> {
    for v in roadmap.nearest(p, CONNECT_CANDIDATES) {
        let q = roadmap.vertices[v];
        if q == p {
            return Ok(Attachment::Vertex(v));
        }
        if !segment_collides(p, q, obstacles) {
            return Ok(Attachment::Edge {
                vertex: v,
                weight: p.distance(q),
            });
        }
    }
    Err(fail)
}

/// Links both query points to their nearest visible roadmap vertices, trying
/// at most [`CONNECT_CANDIDATES`] vertices per endpoint in order of distance.
pub fn connect_query<'a>(
    roadmap: &'a Roadmap,
    query: Query,
    obstacles: &ObstacleSet,
) -> Result<QueryGraph<'a>, RoadmapError> {
    for p in [query.start, query.goal] {
        if !p.is_finite() || obstacles.contains_interior(p) {
            return Err(RoadmapError::QueryNotFree(p));
        }
    }
    if roadmap.vertices.is_empty() {
        return Err(RoadmapError::EmptySkeleton);
    }
    let start = attach(roadmap, query.start, obstacles, RoadmapError::UnconnectableStart)?;
    let goal = attach(roadmap, query.goal, obstacles, RoadmapError::UnconnectableGoal)?;
    Ok(QueryGraph {
        roadmap,
        query,
        start,
        goal,
    })
}

/// Shortest path through the overlay graph, by A* with the straight-line
/// heuristic. Waypoints run from the query start to the query goal.
pub fn path_search(graph: &QueryGraph<'_>) -> Result<Path, RoadmapError> {
    let QueryGraph {
        roadmap,
        query,
        start,
        goal,
    } = *graph;
    if query.start == query.goal {
        return Ok(Path::new(vec![query.start]));
    }
    let n = roadmap.vertex_count();
    // overlay ids: n = query start, n + 1 = query goal
    let node_point = |i: usize| match i {
        i if i < n => roadmap.vertices[i],
        i if i == n => query.start,
        _ => query.goal,
    };
    let src = match start {
        Attachment::Vertex(v) => v,
        Attachment::Edge { .. } => n,
    };
    let dst = match goal {
        Attachment::Vertex(v) => v,
        Attachment::Edge { .. } => n + 1,
    };
    let neighbors = |i: usize, out: &mut Vec<(usize, f64)>| {
        if i < n {
            out.extend_from_slice(&roadmap.adjacency[i]);
        }
        for (att, id) in [(start, n), (goal, n + 1)] {
            if let Attachment::Edge { vertex, weight } = att {
                if i == id {
                    out.push((vertex, weight));
                } else if i == vertex {
                    out.push((id, weight));
                }
            }
        }
    };
    let target = node_point(dst);
    let (nodes, _) =
        search::astar(n + 2, src, dst, neighbors, |i| node_point(i).distance(target)).ok_or(RoadmapError::NoPath)?;
    Ok(Path::new(nodes.into_iter().map(node_point).collect()))
}

/// Number of connected components of the stored graph.
pub fn component_count(roadmap: &Roadmap) -> usize {
    let n = roadmap.vertex_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut count = n;
    for &(a, b, _) in &roadmap.edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
            count -= 1;
        }
    }
    count
}
