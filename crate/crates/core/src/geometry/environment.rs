use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gjk::gjk_distance;
use super::shape::{ConvexShape, Point, Pose2, RobotFootprint};
use super::GeometryError;

pub const ENVIRONMENT_FORMAT_VERSION: u32 = 1;

/// Axis-aligned workspace rectangle in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Bounds {
    pub fn new(min: [f64; 2], max: [f64; 2]) -> Result<Self, GeometryError> {
        if !(min[0] < max[0] && min[1] < max[1]) {
            return Err(GeometryError::Parameter(format!(
                "empty bounds {min:?}..{max:?}"
            )));
        }
        Ok(Bounds { min, max })
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.min[0] && p.x <= self.max[0] && p.y >= self.min[1] && p.y <= self.max[1]
    }

    fn contains_box(&self, lo: &Point, hi: &Point) -> bool {
        self.contains(lo) && self.contains(hi)
    }
}

/// A workspace populated by convex obstacles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: u32,
    pub bounds: Bounds,
    pub obstacles: Vec<ConvexShape>,
    pub seed: u64,
}

impl Environment {
    pub fn new(bounds: Bounds, obstacles: Vec<ConvexShape>, seed: u64) -> Result<Self, GeometryError> {
        for (i, o) in obstacles.iter().enumerate() {
            let (lo, hi) = o.aabb();
            if !bounds.contains_box(&lo, &hi) {
                return Err(GeometryError::Parameter(format!(
                    "obstacle {i} extends outside the workspace"
                )));
            }
        }
        Ok(Environment {
            version: ENVIRONMENT_FORMAT_VERSION,
            bounds,
            obstacles,
            seed,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("environment serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        let env: Environment =
            serde_json::from_str(text).map_err(|e| GeometryError::Parse {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        if env.version != ENVIRONMENT_FORMAT_VERSION {
            return Err(GeometryError::Parameter(format!(
                "unsupported environment version {}",
                env.version
            )));
        }
        Environment::new(env.bounds, env.obstacles, env.seed)
    }

    /// Minimum separation between the posed robot and any obstacle.
    pub fn distance_to_collision(
        &self,
        robot: &RobotFootprint,
        pose: &Pose2,
    ) -> Result<f64, GeometryError> {
        if self.obstacles.is_empty() {
            return Err(GeometryError::NoObstacles);
        }
        let placed = robot.at(pose);
        let mut best = f64::INFINITY;
        for o in &self.obstacles {
            let d = gjk_distance(&placed, o);
            if d < best {
                best = d;
                if best == 0.0 {
                    break;
                }
            }
        }
        Ok(best)
    }

    /// Like [`distance_to_collision`](Self::distance_to_collision), but an
    /// obstacle-free workspace yields `f64::INFINITY` instead of an error.
    pub fn clearance(&self, robot: &RobotFootprint, pose: &Pose2) -> f64 {
        self.distance_to_collision(robot, pose)
            .unwrap_or(f64::INFINITY)
    }
}

/// Parameters for random block-and-circle worlds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerateParams {
    pub n_obstacles: usize,
    pub bounds: Bounds,
    /// Smallest and largest obstacle extent (side length or diameter), meters.
    pub size_range: (f64, f64),
}

/// Deterministically generates an environment of axis-aligned blocks and
/// circles from `seed`. Start/goal clearance is left to the caller.
pub fn generate_environment(seed: u64, params: &GenerateParams) -> Result<Environment, GeometryError> {
    let (lo, hi) = params.size_range;
    if !(lo > 0.0 && hi >= lo) {
        return Err(GeometryError::Parameter(format!(
            "invalid size range ({lo}, {hi})"
        )));
    }
    let b = params.bounds;
    if hi > b.width() || hi > b.height() {
        return Err(GeometryError::Parameter(format!(
            "obstacle size {hi} exceeds workspace {}x{}",
            b.width(),
            b.height()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obstacles = Vec::with_capacity(params.n_obstacles);
    for _ in 0..params.n_obstacles {
        let circle = rng.random_bool(0.5);
        if circle {
            let r = rng.random_range(lo..=hi) / 2.0;
            let cx = rng.random_range(b.min[0] + r..=b.max[0] - r);
            let cy = rng.random_range(b.min[1] + r..=b.max[1] - r);
            obstacles.push(ConvexShape::circle(Point::new(cx, cy), r)?);
        } else {
            let w = rng.random_range(lo..=hi);
            let h = rng.random_range(lo..=hi);
            let cx = rng.random_range(b.min[0] + w / 2.0..=b.max[0] - w / 2.0);
            let cy = rng.random_range(b.min[1] + h / 2.0..=b.max[1] - h / 2.0);
            obstacles.push(ConvexShape::rectangle(Point::new(cx, cy), w, h)?);
        }
    }
    Environment::new(b, obstacles, seed)
}
