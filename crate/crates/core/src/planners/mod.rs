//! RRT and RRT* over the plane (straight-line steering) and over planar poses
//! (Dubins steering), parameterized by an edge validator.

mod rrt;

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chance::{connect, point_satisfies, ChanceConstraint, ConnectOptions, Segment};
use crate::geometry::{Bounds, Environment, Pose2, RobotFootprint};
use crate::gp::GpDistanceModel;
use crate::robots::{DubinsPath, GoalRegion};

pub use rrt::{grow, near_radius, rrt, rrt_star, Node, Tree};

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("no plan after {iterations} iterations ({nodes} nodes): {reason}")]
    Failure { iterations: usize, nodes: usize, reason: String },
    #[error("invalid problem: {0}")]
    Problem(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Steering {
    /// Straight lines of at most `eta`.
    Line { eta: f64 },
    /// Dubins words of radius `rho`, cut after `eta` of arc length.
    Dubins { rho: f64, eta: f64 },
}

impl Steering {
    pub fn eta(&self) -> f64 {
        match *self {
            Steering::Line { eta } | Steering::Dubins { eta, .. } => eta,
        }
    }

    /// Exact connection from `a` to `b`.
    pub fn connect(&self, a: &Pose2, b: &Pose2) -> Segment {
        match *self {
            Steering::Line { .. } => Segment::line(*a, Pose2 { theta: a.theta, ..*b }),
            Steering::Dubins { rho, .. } => Segment::dubins(DubinsPath::shortest(*a, *b, rho)),
        }
    }

    /// Connection from `a` toward `b`, cut at `eta`.
    pub fn steer(&self, a: &Pose2, b: &Pose2) -> Segment {
        match *self {
            Steering::Line { eta } => {
                let (dx, dy) = (b.x - a.x, b.y - a.y);
                let d = dx.hypot(dy);
                if d <= eta {
                    Segment::line(*a, Pose2 { theta: a.theta, ..*b })
                } else {
                    Segment::line(*a, Pose2::new(a.x + dx * eta / d, a.y + dy * eta / d, a.theta))
                }
            }
            Steering::Dubins { rho, eta } => {
                let p = DubinsPath::shortest(*a, *b, rho);
                Segment::dubins(if p.length() > eta { p.truncated(eta) } else { p })
            }
        }
    }

    /// Steering cost from `a` to `b` (path length of the exact connection).
    pub fn distance(&self, a: &Pose2, b: &Pose2) -> f64 {
        match *self {
            Steering::Line { .. } => (b.x - a.x).hypot(b.y - a.y),
            Steering::Dubins { rho, .. } => DubinsPath::shortest(*a, *b, rho).length(),
        }
    }

    /// Dimension of the sampled space.
    pub fn dim(&self) -> usize {
        match self {
            Steering::Line { .. } => 2,
            Steering::Dubins { .. } => 3,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, bounds: &Bounds, rng: &mut R) -> Pose2 {
        let x = rng.random_range(bounds.min[0]..=bounds.max[0]);
        let y = rng.random_range(bounds.min[1]..=bounds.max[1]);
        let theta = match self {
            Steering::Line { .. } => 0.0,
            Steering::Dubins { .. } => rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        };
        Pose2::new(x, y, theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Rrt,
    RrtStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerOptions {
    pub max_iterations: usize,
    /// Wall-clock budget in seconds; `None` keeps runs reproducible.
    pub time_limit: Option<f64>,
    pub goal_bias: f64,
    /// RRT* radius constant; `None` derives it from the workspace measure.
    pub gamma: Option<f64>,
}

impl Default for PlannerOptions {
    fn default() -> Self {
        PlannerOptions { max_iterations: 3000, time_limit: Some(120.0), goal_bias: 0.05, gamma: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanningProblem {
    pub start: Pose2,
    pub goal: GoalRegion,
    pub bounds: Bounds,
    pub steering: Steering,
    pub options: PlannerOptions,
    pub seed: u64,
}

/// Outcome of checking one edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeCheck {
    pub valid: bool,
    /// Minimum of `g` along the edge, for chance validators.
    pub c_hat: Option<f64>,
}

/// The CONNECT predicate of a planner.
pub trait EdgeValidator {
    fn state_valid(&mut self, q: &Pose2) -> bool;
    fn edge(&mut self, segment: &Segment) -> EdgeCheck;
    /// `(connect calls, cache hits)`.
    fn counters(&self) -> (usize, usize) {
        (0, 0)
    }
}

/// Validator from two closures; for tests and baselines.
pub struct FnValidator<S, E> {
    pub state: S,
    pub edge: E,
}

impl<S: FnMut(&Pose2) -> bool, E: FnMut(&Segment) -> bool> EdgeValidator for FnValidator<S, E> {
    fn state_valid(&mut self, q: &Pose2) -> bool {
        (self.state)(q)
    }

    fn edge(&mut self, segment: &Segment) -> EdgeCheck {
        EdgeCheck { valid: (self.edge)(segment), c_hat: None }
    }
}

/// Deterministic GJK check of the nominal robot sampled along the edge.
pub struct CollisionValidator<'a> {
    pub env: &'a Environment,
    pub robot: &'a RobotFootprint,
    /// Arc length between checked poses.
    pub resolution: f64,
    calls: usize,
}

impl<'a> CollisionValidator<'a> {
    pub fn new(env: &'a Environment, robot: &'a RobotFootprint, resolution: f64) -> Self {
        CollisionValidator { env, robot, resolution, calls: 0 }
    }
}

impl EdgeValidator for CollisionValidator<'_> {
    fn state_valid(&mut self, q: &Pose2) -> bool {
        self.env.clearance(self.robot, q) > 0.0
    }

    fn edge(&mut self, segment: &Segment) -> EdgeCheck {
        self.calls += 1;
        let n = (segment.length() / self.resolution).ceil().max(1.0) as usize;
        let valid = (0..=n).all(|i| self.env.clearance(self.robot, &segment.at(i as f64 / n as f64)) > 0.0);
        EdgeCheck { valid, c_hat: None }
    }

    fn counters(&self) -> (usize, usize) {
        (self.calls, 0)
    }
}

fn pose_bits(q: &Pose2) -> [u64; 3] {
    [q.x.to_bits(), q.y.to_bits(), q.theta.to_bits()]
}

/// Chance-constraint CONNECT with a result cache keyed by the edge
/// endpoints and δ. Endpoints are point-checked first: the minimum along
/// the edge can never exceed `g` at an endpoint.
pub struct ChanceValidator<'a> {
    pub model: &'a GpDistanceModel,
    pub constraint: ChanceConstraint,
    pub options: ConnectOptions,
    cache: HashMap<([u64; 3], [u64; 3], u64), EdgeCheck>,
    calls: usize,
    hits: usize,
}

impl<'a> ChanceValidator<'a> {
    pub fn new(model: &'a GpDistanceModel, constraint: ChanceConstraint, options: ConnectOptions) -> Self {
        ChanceValidator { model, constraint, options, cache: HashMap::new(), calls: 0, hits: 0 }
    }

    fn key(&self, s: &Segment) -> ([u64; 3], [u64; 3], u64) {
        (pose_bits(&s.start()), pose_bits(&s.end()), self.constraint.delta.to_bits())
    }
}

impl EdgeValidator for ChanceValidator<'_> {
    fn state_valid(&mut self, q: &Pose2) -> bool {
        point_satisfies(self.model, q, &self.constraint, &self.options.input_map)
    }

    fn edge(&mut self, segment: &Segment) -> EdgeCheck {
        let key = self.key(segment);
        if let Some(hit) = self.cache.get(&key) {
            self.hits += 1;
            return *hit;
        }
        let map = self.options.input_map;
        let ends = [segment.start(), segment.end()];
        let result = if let Some(bad) = ends.iter().map(|q| self.model.g(&map.project(q))).find(|&g| g < self.constraint.c) {
            EdgeCheck { valid: false, c_hat: Some(bad) }
        } else {
            self.calls += 1;
            let r = connect(self.model, segment, &self.constraint, &self.options);
            EdgeCheck { valid: r.accepted, c_hat: Some(r.c_hat) }
        };
        self.cache.insert(key, result);
        result
    }

    fn counters(&self) -> (usize, usize) {
        (self.calls, self.hits)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanMeta {
    pub planner: String,
    pub iterations: usize,
    pub nodes: usize,
    pub connect_calls: usize,
    pub cache_hits: usize,
    pub goal_bias: f64,
    pub wall_time: f64,
    /// `(iteration, best cost)` whenever the best goal cost changes.
    pub best_cost_trace: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub states: Vec<Pose2>,
    pub segments: Vec<Segment>,
    pub edge_c_hat: Vec<Option<f64>>,
    pub length: f64,
    pub meta: PlanMeta,
}

impl Plan {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Re-runs the validator on every edge of a finished plan.
pub fn shortcut_check(plan: &Plan, validator: &mut dyn EdgeValidator) -> bool {
    plan.segments.iter().all(|s| validator.edge(s).valid)
}

/// CCGP-MP (`RrtStar`: CCGP-MP*): the planner with the chance CONNECT.
pub fn ccgp(
    problem: &PlanningProblem,
    kind: PlannerKind,
    model: &GpDistanceModel,
    delta: f64,
    options: ConnectOptions,
) -> Result<Plan, PlanError> {
    let cc = ChanceConstraint::new(delta).map_err(|e| PlanError::Problem(e.to_string()))?;
    let mut v = ChanceValidator::new(model, cc, options);
    let mut plan = match kind {
        PlannerKind::Rrt => rrt(problem, &mut v),
        PlannerKind::RrtStar => rrt_star(problem, &mut v),
    }?;
    plan.meta.planner = match kind {
        PlannerKind::Rrt => "ccgp".into(),
        PlannerKind::RrtStar => "ccgp*".into(),
    };
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steer_caps_length() {
        let s = Steering::Line { eta: 1.0 };
        let seg = s.steer(&Pose2::new(0.0, 0.0, 0.0), &Pose2::new(3.0, 4.0, 0.0));
        assert!((seg.length() - 1.0).abs() < 1e-12);
        let d = Steering::Dubins { rho: 1.0, eta: 2.0 };
        let seg = d.steer(&Pose2::new(0.0, 0.0, 0.0), &Pose2::new(-5.0, 4.0, 1.0));
        assert!((seg.length() - 2.0).abs() < 1e-12);
    }
}
