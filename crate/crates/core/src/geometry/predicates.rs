//! Orientation and segment predicates with exact fallback.
//!
//! The floating-point determinant is trusted only when its magnitude clears a
//! forward error bound; otherwise the sign is recomputed with big rationals
//! built from the exact binary values of the inputs.

use std::cmp::Ordering;

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::point::Point;

const EPS: f64 = f64::EPSILON / 2.0;
const CCW_ERR_BOUND: f64 = (3.0 + 16.0 * EPS) * EPS;

/// Sign of the cross product `(b - a) × (c - a)`: `Greater` when `c` lies to
/// the left of the directed line `a → b` in a y-up frame.
pub fn orient(a: Point, b: Point, c: Point) -> Ordering {
    let left = (b.x - a.x) * (c.y - a.y);
    let right = (b.y - a.y) * (c.x - a.x);
    let det = left - right;
    let bound = CCW_ERR_BOUND * (left.abs() + right.abs());
    if det > bound {
        Ordering::Greater
    } else if -det > bound {
        Ordering::Less
    } else {
        orient_exact(a, b, c)
    }
}

fn rational(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite coordinate")
}

fn orient_exact(a: Point, b: Point, c: Point) -> Ordering {
    let (ax, ay) = (rational(a.x), rational(a.y));
    let det = (rational(b.x) - &ax) * (rational(c.y) - &ay) - (rational(b.y) - &ay) * (rational(c.x) - &ax);
    if det.is_zero() {
        Ordering::Equal
    } else if det.is_positive() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

/// For collinear `p`, `q`, `r`: whether `r` lies within the closed segment `pq`.
fn within_box(p: Point, q: Point, r: Point) -> bool {
    p.x.min(q.x) <= r.x && r.x <= p.x.max(q.x) && p.y.min(q.y) <= r.y && r.y <= p.y.max(q.y)
}

/// Whether the closed segments `pq` and `ab` share at least one point.
pub fn segments_intersect(p: Point, q: Point, a: Point, b: Point) -> bool {
    if p.x.max(q.x) < a.x.min(b.x)
        || a.x.max(b.x) < p.x.min(q.x)
        || p.y.max(q.y) < a.y.min(b.y)
        || a.y.max(b.y) < p.y.min(q.y)
    {
        return false;
    }
    let o1 = orient(p, q, a);
    let o2 = orient(p, q, b);
    let o3 = orient(a, b, p);
    let o4 = orient(a, b, q);
    if o1 != o2
        && o1 != Ordering::Equal
        && o2 != Ordering::Equal
        && o3 != o4
        && o3 != Ordering::Equal
        && o4 != Ordering::Equal
    {
        return true;
    }
    (o1 == Ordering::Equal && within_box(p, q, a))
        || (o2 == Ordering::Equal && within_box(p, q, b))
        || (o3 == Ordering::Equal && within_box(a, b, p))
        || (o4 == Ordering::Equal && within_box(a, b, q))
}

/// Whether the horizontal ray from `p` towards +x crosses edge `ab`, using the
/// half-open rule on y so shared vertices are counted once.
pub fn ray_crosses(p: Point, a: Point, b: Point) -> bool {
    if (a.y > p.y) == (b.y > p.y) {
        return false;
    }
    let o = orient(a, b, p);
    if b.y > a.y {
        o == Ordering::Greater
    } else {
        o == Ordering::Less
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_signs() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(1.0, 0.0);
        assert_eq!(orient(a, b, Point::new(0.5, 1.0)), Ordering::Greater);
        assert_eq!(orient(a, b, Point::new(0.5, -1.0)), Ordering::Less);
        assert_eq!(orient(a, b, Point::new(7.0, 0.0)), Ordering::Equal);
    }

    #[test]
    fn near_degenerate_uses_exact_path() {
        // Classic failure case for naive floating-point orientation.
        let a = Point::new(0.5, 0.5);
        let b = Point::new(12.0, 12.0);
        let c = Point::new(24.0, 24.0);
        for i in 0..64 {
            let p = Point::new(0.5 + i as f64 * f64::EPSILON, 0.5);
            assert_eq!(orient(p, b, c), orient_exact(p, b, c));
        }
        assert_eq!(orient(a, b, c), Ordering::Equal);
    }

    #[test]
    fn closed_segment_touching() {
        let p = Point::new(0.0, 0.0);
        let q = Point::new(2.0, 2.0);
        // touches at an endpoint of ab
        assert!(segments_intersect(p, q, Point::new(1.0, 1.0), Point::new(3.0, 0.0)));
        // collinear overlap
        assert!(segments_intersect(p, q, Point::new(1.0, 1.0), Point::new(3.0, 3.0)));
        // collinear, disjoint
        assert!(!segments_intersect(p, q, Point::new(3.0, 3.0), Point::new(4.0, 4.0)));
        // proper crossing
        assert!(segments_intersect(p, q, Point::new(0.0, 2.0), Point::new(2.0, 0.0)));
        // parallel
        assert!(!segments_intersect(p, q, Point::new(0.0, 1.0), Point::new(1.0, 2.0)));
        // degenerate point segment on ab
        let m = Point::new(1.0, 1.0);
        assert!(segments_intersect(m, m, p, q));
    }
}
