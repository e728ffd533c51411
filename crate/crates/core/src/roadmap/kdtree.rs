use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::point::Point;

/// Static 2D kd-tree over a point list. Queries return point indices ordered
/// by `(distance², index)`, so ties resolve the same way on every run.
#[derive(Clone, Debug)]
pub struct KdTree {
    points: Vec<Point>,
    // indices arranged so every subrange's median is its split node
    order: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Candidate {
    d2: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl KdTree {
    pub fn new(points: &[Point]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        build(points, &mut order, 0);
        Self {
            points: points.to_vec(),
            order,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Up to `k` nearest points to `q`, closest first.
    pub fn nearest(&self, q: Point, k: usize) -> Vec<usize> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(q, k, 0, self.order.len(), 0, &mut heap);
        let mut found: Vec<Candidate> = heap.into_vec();
        found.sort();
        found.into_iter().map(|c| c.index).collect()
    }

    fn search(&self, q: Point, k: usize, lo: usize, hi: usize, depth: usize, heap: &mut BinaryHeap<Candidate>) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let index = self.order[mid];
        let p = self.points[index];
        let cand = Candidate {
            d2: q.distance_squared(p),
            index,
        };
        if heap.len() < k {
            heap.push(cand);
        } else if cand < *heap.peek().unwrap() {
            heap.pop();
            heap.push(cand);
        }
        let diff = if depth.is_multiple_of(2) { q.x - p.x } else { q.y - p.y };
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(q, k, near.0, near.1, depth + 1, heap);
        // `<=` keeps equal-distance points with smaller indices reachable
        if heap.len() < k || diff * diff <= heap.peek().unwrap().d2 {
            self.search(q, k, far.0, far.1, depth + 1, heap);
        }
    }
}

fn build(points: &[Point], order: &mut [usize], depth: usize) {
    if order.len() <= 1 {
        return;
    }
    let mid = order.len() / 2;
    let key = |i: &usize| {
        let p = points[*i];
        if depth.is_multiple_of(2) {
            p.x
        } else {
            p.y
        }
    };
    order.select_nth_unstable_by(mid, |a, b| key(a).total_cmp(&key(b)).then(a.cmp(b)));
    let (left, right) = order.split_at_mut(mid);
    build(points, left, depth + 1);
    build(points, &mut right[1..], depth + 1);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute(points: &[Point], q: Point, k: usize) -> Vec<usize> {
        let mut all: Vec<usize> = (0..points.len()).collect();
        all.sort_by(|&a, &b| {
            q.distance_squared(points[a])
                .total_cmp(&q.distance_squared(points[b]))
                .then(a.cmp(&b))
        });
        all.truncate(k);
        all
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for trial in 0..50 {
            let n = rng.random_range(1..300);
            // integer-ish coordinates force many exact distance ties
            let points: Vec<Point> = (0..n)
                .map(|_| {
                    Point::new(
                        rng.random_range(0..20) as f64 + 0.5,
                        rng.random_range(0..20) as f64 + 0.5,
                    )
                })
                .collect();
            let tree = KdTree::new(&points);
            for _ in 0..20 {
                let q = Point::new(rng.random_range(0.0..20.0), rng.random_range(0.0..20.0));
                let k = rng.random_range(1..12);
                assert_eq!(tree.nearest(q, k), brute(&points, q, k), "trial {trial}");
            }
        }
    }

    #[test]
    fn small_cases() {
        let tree = KdTree::new(&[]);
        assert!(tree.nearest(Point::new(0.0, 0.0), 3).is_empty());
        let pts = [Point::new(1.0, 1.0), Point::new(1.0, 1.0), Point::new(5.0, 1.0)];
        let tree = KdTree::new(&pts);
        assert_eq!(tree.nearest(Point::new(1.0, 1.0), 5), vec![0, 1, 2]);
        assert_eq!(tree.nearest(Point::new(4.0, 1.0), 1), vec![2]);
    }
}
