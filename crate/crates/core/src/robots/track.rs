//! Closed-loop execution of a planned path: plant, filter, and tracking
//! controller stepped together until the goal, a collision, or the step limit.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, Matrix3, RowVector3, Vector1, Vector2, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dubins::wrap_angle;
use super::estimate::{kalman_update, lqr_gain, measurement_update, riccati_step, Belief, ControlError};
use super::plants::{DubinsPlant, LinearPlant};
use crate::chance::Segment;
use crate::geometry::{Environment, Pose2, RobotFootprint};

/// Position disc with an optional heading cone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalRegion {
    pub center: Pose2,
    pub radius: f64,
    /// Largest accepted heading error (rad), if heading matters.
    pub heading_tolerance: Option<f64>,
}

impl GoalRegion {
    pub fn disc(center: Pose2, radius: f64) -> Self {
        GoalRegion { center, radius, heading_tolerance: None }
    }

    pub fn contains(&self, q: &Pose2) -> bool {
        let near = (q.x - self.center.x).hypot(q.y - self.center.y) <= self.radius;
        near && self.heading_tolerance.is_none_or(|tol| wrap_angle(q.theta - self.center.theta).abs() <= tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Success,
    Collision,
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rollout {
    pub states: Vec<Pose2>,
    pub estimates: Vec<Pose2>,
    pub controls: Vec<Vec<f64>>,
    /// True-state distance to collision at every recorded state.
    pub distances: Vec<f64>,
    pub min_distance: f64,
    pub outcome: Outcome,
    /// Nominal number of steps of the reference.
    pub nominal_steps: usize,
}

#[derive(Serialize)]
struct LogLine<'a> {
    step: usize,
    state: &'a Pose2,
    estimate: &'a Pose2,
    control: Option<&'a [f64]>,
    distance: f64,
}

impl Rollout {
    /// One JSON object per recorded step.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (i, ((s, e), d)) in self.states.iter().zip(&self.estimates).zip(&self.distances).enumerate() {
            let line = LogLine { step: i, state: s, estimate: e, control: self.controls.get(i).map(|c| c.as_slice()), distance: *d };
            out.push_str(&serde_json::to_string(&line).expect("plain data"));
            out.push('\n');
        }
        out
    }
}

/// Arc-length lookup over a chain of segments.
pub struct PathSampler<'a> {
    segments: &'a [Segment],
    cumulative: Vec<f64>,
}

impl<'a> PathSampler<'a> {
    pub fn new(segments: &'a [Segment]) -> Self {
        let mut cumulative = vec![0.0];
        for s in segments {
            cumulative.push(cumulative.last().unwrap() + s.length());
        }
        PathSampler { segments, cumulative }
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn at(&self, s: f64) -> Pose2 {
        let s = s.clamp(0.0, self.length());
        let i = self.cumulative[1..].partition_point(|&c| c < s).min(self.segments.len() - 1);
        let len = self.segments[i].length();
        let t = if len > 0.0 { (s - self.cumulative[i]) / len } else { 0.0 };
        self.segments[i].at(t)
    }
}

pub const DEFAULT_STEP_LIMIT_FACTOR: usize = 4;

/// Double-integrator-free linear robot with Kalman filter and
/// infinite-horizon LQR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSystem {
    pub plant: LinearPlant,
    pub q: Matrix2<f64>,
    pub r: Matrix2<f64>,
    /// Reference spacing per step (m); at most `u_max`.
    pub step_length: f64,
    pub initial_cov: Matrix2<f64>,
}

impl Default for LinearSystem {
    fn default() -> Self {
        LinearSystem {
            plant: LinearPlant::default(),
            q: Matrix2::identity(),
            r: Matrix2::identity(),
            step_length: 0.5,
            initial_cov: Matrix2::identity() * 0.01,
        }
    }
}

impl LinearSystem {
    pub fn gain(&self) -> Result<Matrix2<f64>, ControlError> {
        let i = DMatrix::identity(2, 2);
        let k = lqr_gain(&i, &i, &DMatrix::from_column_slice(2, 2, self.q.as_slice()), &DMatrix::from_column_slice(2, 2, self.r.as_slice()))?.gain;
        Ok(Matrix2::from_column_slice(k.as_slice()))
    }

    pub fn initial_belief(&self, start: &Pose2) -> Belief<2> {
        Belief { mean: Vector2::new(start.x, start.y), cov: self.initial_cov }
    }

    /// Applies `u`, then filters the new observation.
    pub fn advance<R: Rng + ?Sized>(
        &self,
        truth: &mut Vector2<f64>,
        belief: &mut Belief<2>,
        u: &Vector2<f64>,
        rng: &mut R,
    ) -> Result<(), ControlError> {
        let u = self.plant.saturate(*u);
        let (x, z) = self.plant.step(truth, &u, rng);
        *truth = x;
        let i = Matrix2::identity();
        *belief = kalman_update(belief, &u, &z, &i, &i, &i, &self.plant.motion_cov, &self.plant.observation_cov)?;
        Ok(())
    }

    pub fn reference(&self, path: &[Segment]) -> Vec<Vector2<f64>> {
        let sampler = PathSampler::new(path);
        let n = (sampler.length() / self.step_length).ceil().max(1.0) as usize;
        (0..=n)
            .map(|k| {
                let q = sampler.at(k as f64 * self.step_length);
                Vector2::new(q.x, q.y)
            })
            .collect()
    }

    /// Follows `path` from its first pose with `u = Δr − K(x̂ − r)`.
    pub fn track<R: Rng + ?Sized>(
        &self,
        path: &[Segment],
        goal: &GoalRegion,
        env: &Environment,
        robot: &RobotFootprint,
        rng: &mut R,
    ) -> Result<Rollout, ControlError> {
        let k = self.gain()?;
        let reference = self.reference(path);
        let n = reference.len() - 1;
        let start = path[0].start();
        let mut truth = Vector2::new(start.x, start.y);
        let mut belief = self.initial_belief(&start);
        let mut log = RolloutLog::new(n);
        for step in 0.. {
            let pose = Pose2::new(truth[0], truth[1], 0.0);
            let est = Pose2::new(belief.mean[0], belief.mean[1], 0.0);
            if let Some(done) = log.record(pose, est, env, robot, goal, step) {
                return Ok(log.finish(done));
            }
            let r = reference[step.min(n)];
            let r_next = reference[(step + 1).min(n)];
            let u = self.plant.saturate((r_next - r) - k * (belief.mean - r));
            log.controls.push(u.as_slice().to_vec());
            self.advance(&mut truth, &mut belief, &u, rng)?;
        }
        unreachable!()
    }
}

/// Constant-speed unicycle with EKF and time-varying LQG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DubinsSystem {
    pub plant: DubinsPlant,
    pub q: Matrix3<f64>,
    pub r: f64,
    pub initial_cov: Matrix3<f64>,
}

impl Default for DubinsSystem {
    fn default() -> Self {
        DubinsSystem {
            plant: DubinsPlant::default(),
            q: Matrix3::identity(),
            r: 1.0,
            initial_cov: Matrix3::from_diagonal(&Vector3::new(0.01, 0.01, 0.0025)),
        }
    }
}

fn pose_vec(q: &Pose2) -> Vector3<f64> {
    Vector3::new(q.x, q.y, q.theta)
}

fn vec_pose(v: &Vector3<f64>) -> Pose2 {
    Pose2::new(v[0], v[1], v[2])
}

/// Reference poses, nominal turn rates, and feedback gains.
#[derive(Debug, Clone)]
pub struct DubinsReference {
    pub states: Vec<Vector3<f64>>,
    pub omegas: Vec<f64>,
    pub gains: Vec<RowVector3<f64>>,
    /// Steps that cover the planned path; the rest drives straight on.
    pub nominal_steps: usize,
}

impl DubinsSystem {
    pub fn initial_belief(&self, start: &Pose2) -> Belief<3> {
        Belief { mean: pose_vec(start), cov: self.initial_cov }
    }

    pub fn advance<R: Rng + ?Sized>(
        &self,
        truth: &mut Vector3<f64>,
        belief: &mut Belief<3>,
        omega: f64,
        rng: &mut R,
    ) -> Result<(), ControlError> {
        let omega = self.plant.saturate(omega);
        *truth = self.plant.step(truth, omega, rng);
        let z = self.plant.observe(truth, rng);
        let (a, _) = self.plant.jacobians(&belief.mean, omega);
        let prior = Belief {
            mean: self.plant.nominal(&belief.mean, omega),
            cov: a * belief.cov * a.transpose() + self.plant.process_cov(&belief.mean, omega),
        };
        let mut y = z - prior.mean;
        y[2] = wrap_angle(y[2]);
        let mut post = measurement_update(&prior, &y, &Matrix3::identity(), &self.plant.observation_cov)?;
        post.mean[2] = wrap_angle(post.mean[2]);
        *belief = post;
        Ok(())
    }

    /// Samples the path every `vτ` of arc length, re-integrates the nominal
    /// model so the reference is dynamically consistent, extends it straight
    /// to the step limit, and runs the backward Riccati pass.
    pub fn reference(&self, path: &[Segment], limit_factor: usize) -> Result<DubinsReference, ControlError> {
        let sampler = PathSampler::new(path);
        let ds = self.plant.speed * self.plant.tau;
        let n = (sampler.length() / ds).ceil().max(1.0) as usize;
        let total = n * limit_factor.max(1);
        let mut states = vec![pose_vec(&sampler.at(0.0))];
        let mut omegas = Vec::with_capacity(total);
        for k in 0..total {
            let w = if k < n {
                let a = sampler.at(k as f64 * ds).theta;
                let b = sampler.at((k + 1) as f64 * ds).theta;
                wrap_angle(b - a) / self.plant.tau
            } else {
                0.0
            };
            omegas.push(w);
            let next = self.plant.nominal(states.last().unwrap(), w);
            states.push(next);
        }
        let q = DMatrix::from_column_slice(3, 3, self.q.as_slice());
        let r = DMatrix::from_element(1, 1, self.r);
        let mut p = q.clone();
        let mut gains = vec![RowVector3::zeros(); total];
        for k in (0..total).rev() {
            let (a, b) = self.plant.jacobians(&states[k], omegas[k]);
            let a = DMatrix::from_column_slice(3, 3, a.as_slice());
            let b = DMatrix::from_column_slice(3, 1, b.as_slice());
            let (gain, next) = riccati_step(&a, &b, &q, &r, &p)?;
            gains[k] = RowVector3::new(gain[(0, 0)], gain[(0, 1)], gain[(0, 2)]);
            p = next;
        }
        Ok(DubinsReference { states, omegas, gains, nominal_steps: n })
    }

    pub fn control(&self, reference: &DubinsReference, step: usize, estimate: &Vector3<f64>) -> f64 {
        let k = step.min(reference.omegas.len() - 1);
        let mut e = estimate - reference.states[k];
        e[2] = wrap_angle(e[2]);
        self.plant.saturate(reference.omegas[k] - (reference.gains[k] * e)[0])
    }

    pub fn track<R: Rng + ?Sized>(
        &self,
        path: &[Segment],
        goal: &GoalRegion,
        env: &Environment,
        robot: &RobotFootprint,
        rng: &mut R,
    ) -> Result<Rollout, ControlError> {
        let reference = self.reference(path, DEFAULT_STEP_LIMIT_FACTOR)?;
        let mut truth = reference.states[0];
        let mut belief = self.initial_belief(&vec_pose(&truth));
        let mut log = RolloutLog::new(reference.nominal_steps);
        for step in 0.. {
            if let Some(done) = log.record(vec_pose(&truth), vec_pose(&belief.mean), env, robot, goal, step) {
                return Ok(log.finish(done));
            }
            let w = self.control(&reference, step, &belief.mean);
            log.controls.push(Vector1::new(w).as_slice().to_vec());
            self.advance(&mut truth, &mut belief, w, rng)?;
        }
        unreachable!()
    }
}

/// Either closed-loop robot, selected by configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RobotSystem {
    Linear(LinearSystem),
    Dubins(DubinsSystem),
}

impl RobotSystem {
    pub fn track<R: Rng + ?Sized>(
        &self,
        path: &[Segment],
        goal: &GoalRegion,
        env: &Environment,
        robot: &RobotFootprint,
        rng: &mut R,
    ) -> Result<Rollout, ControlError> {
        match self {
            RobotSystem::Linear(s) => s.track(path, goal, env, robot, rng),
            RobotSystem::Dubins(s) => s.track(path, goal, env, robot, rng),
        }
    }

    /// Same controller and filter with every noise source switched off.
    pub fn noise_free(&self) -> Self {
        match self {
            RobotSystem::Linear(s) => RobotSystem::Linear(LinearSystem {
                plant: LinearPlant::noise_free(s.plant.u_max),
                initial_cov: Matrix2::zeros(),
                ..s.clone()
            }),
            RobotSystem::Dubins(s) => RobotSystem::Dubins(DubinsSystem {
                plant: DubinsPlant { observation_cov: Matrix3::identity() * 1e-12, ..s.plant.noise_free_copy() },
                initial_cov: Matrix3::zeros(),
                ..s.clone()
            }),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RobotSystem::Linear(_) => "linear",
            RobotSystem::Dubins(_) => "dubins",
        }
    }
}

struct RolloutLog {
    states: Vec<Pose2>,
    estimates: Vec<Pose2>,
    controls: Vec<Vec<f64>>,
    distances: Vec<f64>,
    nominal: usize,
}

impl RolloutLog {
    fn new(nominal: usize) -> Self {
        RolloutLog { states: Vec::new(), estimates: Vec::new(), controls: Vec::new(), distances: Vec::new(), nominal }
    }

    fn record(
        &mut self,
        state: Pose2,
        estimate: Pose2,
        env: &Environment,
        robot: &RobotFootprint,
        goal: &GoalRegion,
        step: usize,
    ) -> Option<Outcome> {
        let d = env.clearance(robot, &state);
        self.states.push(state);
        self.estimates.push(estimate);
        self.distances.push(d);
        if d <= 0.0 {
            Some(Outcome::Collision)
        } else if goal.contains(&state) {
            Some(Outcome::Success)
        } else if step >= DEFAULT_STEP_LIMIT_FACTOR * self.nominal {
            Some(Outcome::Timeout)
        } else {
            None
        }
    }

    fn finish(self, outcome: Outcome) -> Rollout {
        let min_distance = self.distances.iter().copied().fold(f64::INFINITY, f64::min);
        Rollout {
            states: self.states,
            estimates: self.estimates,
            controls: self.controls,
            distances: self.distances,
            min_distance,
            outcome,
            nominal_steps: self.nominal,
        }
    }
}

/// Default Dubins heading cone.
pub const DEFAULT_HEADING_TOLERANCE: f64 = PI / 6.0;
