use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::GeometryError;

pub type Point = Vector2<f64>;

/// Relative tolerance used when rejecting collinear polygon vertices.
const COLLINEAR_EPS: f64 = 1e-12;

/// A convex planar shape in world (or body) coordinates.
///
/// Polygons are stored counter-clockwise and strictly convex. Use the
/// constructors; deserialization re-validates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawShape", into = "RawShape")]
pub enum ConvexShape {
    Polygon { vertices: Vec<Point> },
    Circle { center: Point, radius: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawShape {
    Polygon { vertices: Vec<[f64; 2]> },
    Circle { center: [f64; 2], radius: f64 },
}

impl TryFrom<RawShape> for ConvexShape {
    type Error = GeometryError;

    fn try_from(raw: RawShape) -> Result<Self, Self::Error> {
        match raw {
            RawShape::Polygon { vertices } => {
                ConvexShape::polygon(vertices.into_iter().map(|[x, y]| Point::new(x, y)).collect())
            }
            RawShape::Circle { center, radius } => {
                ConvexShape::circle(Point::new(center[0], center[1]), radius)
            }
        }
    }
}

impl From<ConvexShape> for RawShape {
    fn from(shape: ConvexShape) -> Self {
        match shape {
            ConvexShape::Polygon { vertices } => RawShape::Polygon {
                vertices: vertices.iter().map(|v| [v.x, v.y]).collect(),
            },
            ConvexShape::Circle { center, radius } => RawShape::Circle {
                center: [center.x, center.y],
                radius,
            },
        }
    }
}

fn cross(o: &Point, a: &Point, b: &Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

impl ConvexShape {
    /// Builds a polygon from vertices given in either winding order.
    ///
    /// Fails on fewer than three vertices, non-finite coordinates, collinear
    /// triples, or a non-convex outline.
    pub fn polygon(mut vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::InvalidShape(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(GeometryError::InvalidShape("non-finite vertex".into()));
        }
        let signed_area: f64 = (0..vertices.len())
            .map(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % vertices.len()];
                a.x * b.y - b.x * a.y
            })
            .sum::<f64>()
            * 0.5;
        if signed_area < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        let scale = vertices
            .iter()
            .map(|v| v.x.abs().max(v.y.abs()))
            .fold(1.0_f64, f64::max);
        for i in 0..n {
            let o = vertices[i];
            let a = vertices[(i + 1) % n];
            let b = vertices[(i + 2) % n];
            let c = cross(&o, &a, &b);
            if c.abs() <= COLLINEAR_EPS * scale * scale {
                return Err(GeometryError::InvalidShape(format!(
                    "collinear or repeated vertices at index {}",
                    (i + 1) % n
                )));
            }
            if c < 0.0 {
                return Err(GeometryError::InvalidShape("polygon is not convex".into()));
            }
        }
        Ok(ConvexShape::Polygon { vertices })
    }

    pub fn circle(center: Point, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0) || !radius.is_finite() || !center.x.is_finite() || !center.y.is_finite()
        {
            return Err(GeometryError::InvalidShape(format!(
                "circle radius must be positive and finite, got {radius}"
            )));
        }
        Ok(ConvexShape::Circle { center, radius })
    }

    /// Axis-aligned rectangle centered at `center`.
    pub fn rectangle(center: Point, width: f64, height: f64) -> Result<Self, GeometryError> {
        let (hw, hh) = (width / 2.0, height / 2.0);
        Self::polygon(vec![
            center + Point::new(-hw, -hh),
            center + Point::new(hw, -hh),
            center + Point::new(hw, hh),
            center + Point::new(-hw, hh),
        ])
    }

    pub fn area(&self) -> f64 {
        match self {
            ConvexShape::Circle { radius, .. } => std::f64::consts::PI * radius * radius,
            ConvexShape::Polygon { vertices } => {
                let n = vertices.len();
                (0..n)
                    .map(|i| {
                        let a = vertices[i];
                        let b = vertices[(i + 1) % n];
                        a.x * b.y - b.x * a.y
                    })
                    .sum::<f64>()
                    * 0.5
            }
        }
    }

    /// Axis-aligned bounding box as `(min, max)`.
    pub fn aabb(&self) -> (Point, Point) {
        match self {
            ConvexShape::Circle { center, radius } => (
                center - Point::new(*radius, *radius),
                center + Point::new(*radius, *radius),
            ),
            ConvexShape::Polygon { vertices } => {
                let mut lo = vertices[0];
                let mut hi = vertices[0];
                for v in &vertices[1..] {
                    lo = lo.inf(v);
                    hi = hi.sup(v);
                }
                (lo, hi)
            }
        }
    }

    /// Applies a rigid motion: rotate by `theta` about the origin, then translate.
    pub fn transformed(&self, translation: Point, theta: f64) -> ConvexShape {
        let (s, c) = theta.sin_cos();
        let rot = |p: &Point| Point::new(c * p.x - s * p.y, s * p.x + c * p.y) + translation;
        match self {
            ConvexShape::Circle { center, radius } => ConvexShape::Circle {
                center: rot(center),
                radius: *radius,
            },
            ConvexShape::Polygon { vertices } => ConvexShape::Polygon {
                vertices: vertices.iter().map(rot).collect(),
            },
        }
    }

    pub(crate) fn core_support(&self, dir: &Point) -> Point {
        match self {
            ConvexShape::Circle { center, .. } => *center,
            ConvexShape::Polygon { vertices } => {
                let mut best = vertices[0];
                let mut best_dot = best.dot(dir);
                for v in &vertices[1..] {
                    let d = v.dot(dir);
                    if d > best_dot {
                        best_dot = d;
                        best = *v;
                    }
                }
                best
            }
        }
    }

    pub(crate) fn margin(&self) -> f64 {
        match self {
            ConvexShape::Circle { radius, .. } => *radius,
            ConvexShape::Polygon { .. } => 0.0,
        }
    }

    pub(crate) fn reference_point(&self) -> Point {
        match self {
            ConvexShape::Circle { center, .. } => *center,
            ConvexShape::Polygon { vertices } => vertices[0],
        }
    }
}

/// Planar pose `(x, y, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose2 { x, y, theta }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

/// Robot outline in its body frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotFootprint {
    pub shape: ConvexShape,
}

impl RobotFootprint {
    pub fn disc(radius: f64) -> Result<Self, GeometryError> {
        Ok(RobotFootprint {
            shape: ConvexShape::circle(Point::zeros(), radius)?,
        })
    }

    /// Rectangle centered on the body origin, `length` along the heading.
    pub fn rectangle(length: f64, width: f64) -> Result<Self, GeometryError> {
        Ok(RobotFootprint {
            shape: ConvexShape::rectangle(Point::zeros(), length, width)?,
        })
    }

    pub fn at(&self, pose: &Pose2) -> ConvexShape {
        self.shape.transformed(pose.position(), pose.theta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clockwise_input_is_reordered() {
        let cw = ConvexShape::polygon(vec![
            Point::new(0.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
        ])
        .unwrap();
        assert!((cw.area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn collinear_polygon_rejected() {
        let err = ConvexShape::polygon(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
        ]);
        assert!(matches!(err, Err(GeometryError::InvalidShape(_))));
        let err = ConvexShape::polygon(vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(1.0, 1.0),
        ]);
        assert!(err.is_err());
    }

    #[test]
    fn non_convex_rejected() {
        let err = ConvexShape::polygon(vec![
            Point::new(0.0, 0.0),
            Point::new(2.0, 0.0),
            Point::new(1.0, 0.5),
            Point::new(2.0, 2.0),
            Point::new(0.0, 2.0),
        ]);
        assert!(err.is_err());
    }

    #[test]
    fn bad_circle_rejected() {
        assert!(ConvexShape::circle(Point::zeros(), 0.0).is_err());
        assert!(ConvexShape::circle(Point::zeros(), -1.0).is_err());
        assert!(ConvexShape::circle(Point::zeros(), f64::NAN).is_err());
    }

    #[test]
    fn posing_preserves_area() {
        let fp = RobotFootprint::rectangle(0.8, 0.4).unwrap();
        let posed = fp.at(&Pose2::new(3.0, -2.0, 0.7));
        assert!((posed.area() - fp.shape.area()).abs() < 1e-12);
    }

    #[test]
    fn serde_revalidates() {
        let json = r#"{"kind":"polygon","vertices":[[0,0],[1,0],[2,0]]}"#;
        assert!(serde_json::from_str::<ConvexShape>(json).is_err());
        let json = r#"{"kind":"circle","center":[1,2],"radius":0.5}"#;
        let c: ConvexShape = serde_json::from_str(json).unwrap();
        assert_eq!(c, ConvexShape::circle(Point::new(1.0, 2.0), 0.5).unwrap());
    }
}
