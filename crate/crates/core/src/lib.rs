//! Skeleton-roadmap path planning on 2D occupancy grids.
//!
//! The offline stage turns a map into a reusable roadmap: free space is
//! skeletonized (Zhang-Suen thinning, medial-axis retraction of random
//! samples, or a small convolutional network), every skeleton pixel becomes a
//! vertex, and k-nearest-neighbor pairs are joined when the connecting segment
//! misses every obstacle polygon. The online stage attaches start and goal
//! to the roadmap and runs a best-first search. A grid A* planner serves as the
//! baseline, and [`navmetrics`] scores paths for navigability.

pub mod geometry;
pub mod gridmap;
pub mod navmetrics;
pub mod neuroskel;
pub mod point;
pub mod roadmap;
pub mod simexec;
pub mod skeleton;

pub use point::Point;
