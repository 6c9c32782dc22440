//! Gilbert–Johnson–Keerthi separation distance between two convex shapes.
//!
//! Circles are handled as a point core inflated by a margin, so the iteration
//! only ever runs on polygon or point cores and the margins are subtracted at
//! the end.

use super::shape::{ConvexShape, Point};

/// Gap between the upper and lower distance bounds at which iteration stops (m).
pub const GJK_TOLERANCE: f64 = 1e-9;
pub const GJK_MAX_ITERATIONS: usize = 100;

/// Euclidean separation between `a` and `b`; zero when they touch or overlap.
pub fn gjk_distance(a: &ConvexShape, b: &ConvexShape) -> f64 {
    let core = core_distance(a, b);
    (core - a.margin() - b.margin()).max(0.0)
}

fn support(a: &ConvexShape, b: &ConvexShape, dir: &Point) -> Point {
    a.core_support(dir) - b.core_support(&-dir)
}

struct Simplex {
    pts: [Point; 3],
    len: usize,
}

impl Simplex {
    fn contains(&self, p: &Point) -> bool {
        self.pts[..self.len].iter().any(|q| q == p)
    }

    fn push(&mut self, p: Point) {
        self.pts[self.len] = p;
        self.len += 1;
    }

    fn set(&mut self, pts: &[Point]) {
        self.pts[..pts.len()].copy_from_slice(pts);
        self.len = pts.len();
    }
}

fn core_distance(a: &ConvexShape, b: &ConvexShape) -> f64 {
    let mut v = a.reference_point() - b.reference_point();
    if v.norm_squared() == 0.0 {
        return 0.0;
    }
    let mut simplex = Simplex {
        pts: [v, Point::zeros(), Point::zeros()],
        len: 1,
    };
    for _ in 0..GJK_MAX_ITERATIONS {
        let w = support(a, b, &-v);
        let vv = v.norm_squared();
        let norm = vv.sqrt();
        if vv - v.dot(&w) <= GJK_TOLERANCE * norm || simplex.contains(&w) {
            return norm;
        }
        simplex.push(w);
        match closest_on_simplex(&mut simplex) {
            Some(p) => v = p,
            None => return 0.0,
        }
        let new_norm = v.norm_squared();
        if new_norm <= 1e-30 {
            return 0.0;
        }
        if new_norm >= vv {
            // no progress: numerical floor reached
            return vv.sqrt().min(new_norm.sqrt());
        }
    }
    v.norm()
}

/// Reduces the simplex to the feature closest to the origin and returns that
/// point, or `None` when the origin lies inside a full triangle.
fn closest_on_simplex(s: &mut Simplex) -> Option<Point> {
    match s.len {
        1 => Some(s.pts[0]),
        2 => {
            let (a, b) = (s.pts[0], s.pts[1]);
            let (p, keep) = closest_on_segment(&a, &b);
            match keep {
                SegmentFeature::A => s.set(&[a]),
                SegmentFeature::B => s.set(&[b]),
                SegmentFeature::Edge => {}
            }
            Some(p)
        }
        3 => closest_on_triangle(s),
        _ => unreachable!("2-D simplex holds at most three points"),
    }
}

enum SegmentFeature {
    A,
    B,
    Edge,
}

fn closest_on_segment(a: &Point, b: &Point) -> (Point, SegmentFeature) {
    let ab = b - a;
    let denom = ab.norm_squared();
    if denom == 0.0 {
        return (*a, SegmentFeature::A);
    }
    let t = -a.dot(&ab) / denom;
    if t <= 0.0 {
        (*a, SegmentFeature::A)
    } else if t >= 1.0 {
        (*b, SegmentFeature::B)
    } else {
        (a + ab * t, SegmentFeature::Edge)
    }
}

fn closest_on_triangle(s: &mut Simplex) -> Option<Point> {
    let (a, b, c) = (s.pts[0], s.pts[1], s.pts[2]);
    let ab = b - a;
    let ac = c - a;
    let d1 = -ab.dot(&a);
    let d2 = -ac.dot(&a);
    if d1 <= 0.0 && d2 <= 0.0 {
        s.set(&[a]);
        return Some(a);
    }
    let d3 = -ab.dot(&b);
    let d4 = -ac.dot(&b);
    if d3 >= 0.0 && d4 <= d3 {
        s.set(&[b]);
        return Some(b);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let t = d1 / (d1 - d3);
        s.set(&[a, b]);
        return Some(a + ab * t);
    }
    let d5 = -ab.dot(&c);
    let d6 = -ac.dot(&c);
    if d6 >= 0.0 && d5 <= d6 {
        s.set(&[c]);
        return Some(c);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let t = d2 / (d2 - d6);
        s.set(&[a, c]);
        return Some(a + ac * t);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        s.set(&[b, c]);
        return Some(b + (c - b) * t);
    }
    let area2 = ab.x * ac.y - ab.y * ac.x;
    let scale = ab.norm_squared().max(ac.norm_squared());
    if area2.abs() <= 1e-14 * scale {
        // Degenerate (flat) triangle: fall back to the best edge.
        let candidates = [(a, b), (a, c), (b, c)];
        let (mut best, mut best_pair) = (closest_on_segment(&a, &b).0, (a, b));
        for (p, q) in &candidates[1..] {
            let cand = closest_on_segment(p, q).0;
            if cand.norm_squared() < best.norm_squared() {
                best = cand;
                best_pair = (*p, *q);
            }
        }
        s.set(&[best_pair.0, best_pair.1]);
        return Some(best);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(cx: f64, cy: f64) -> ConvexShape {
        ConvexShape::rectangle(Point::new(cx, cy), 1.0, 1.0).unwrap()
    }

    #[test]
    fn axis_aligned_gap() {
        assert!((gjk_distance(&square(0.0, 0.0), &square(3.0, 0.0)) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn overlapping_is_zero() {
        assert_eq!(gjk_distance(&square(0.0, 0.0), &square(0.5, 0.0)), 0.0);
    }

    #[test]
    fn touching_is_zero() {
        assert!(gjk_distance(&square(0.0, 0.0), &square(1.0, 0.0)) < 1e-12);
    }

    #[test]
    fn circle_circle() {
        let a = ConvexShape::circle(Point::new(0.0, 0.0), 1.0).unwrap();
        let b = ConvexShape::circle(Point::new(3.0, 4.0), 1.5).unwrap();
        assert!((gjk_distance(&a, &b) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn contained_shapes() {
        let big = ConvexShape::rectangle(Point::zeros(), 10.0, 10.0).unwrap();
        let small = ConvexShape::circle(Point::new(1.0, 1.0), 0.1).unwrap();
        assert_eq!(gjk_distance(&big, &small), 0.0);
        assert_eq!(gjk_distance(&small, &big), 0.0);
    }

    #[test]
    fn vertex_to_vertex_diagonal() {
        let d = gjk_distance(&square(0.0, 0.0), &square(2.0, 2.0));
        assert!((d - 2f64.sqrt()).abs() < 1e-12);
    }
}
