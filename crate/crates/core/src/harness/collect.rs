use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::chance::InputMap;
use crate::geometry::{Environment, Point, Pose2, RobotFootprint};
use crate::robots::{Belief, RobotSystem};

/// Which state the recorded distance is measured at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// Input `x̂`, target `d(x)` at the true state.
    #[default]
    EstimateTrue,
    /// Input `x̂`, target `d(x̂)`.
    EstimateEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollectOptions {
    pub n_samples: usize,
    pub pairing: Pairing,
    pub input_map: InputMap,
    /// Steps per walk before a fresh start is drawn.
    pub walk_length: usize,
    /// Keep one pair every this many steps.
    pub record_every: usize,
}

impl Default for CollectOptions {
    fn default() -> Self {
        CollectOptions {
            n_samples: 2000,
            pairing: Pairing::EstimateTrue,
            input_map: InputMap::Position,
            walk_length: 50,
            record_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub environment_seed: u64,
    pub plant: String,
    pub collection_seed: u64,
    pub pairing: Pairing,
    pub input_map: InputMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    /// Estimated poses behind `inputs`, kept for auditing.
    pub estimates: Vec<Pose2>,
    pub provenance: Provenance,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

fn free_pose<R: Rng + ?Sized>(env: &Environment, robot: &RobotFootprint, rng: &mut R) -> Pose2 {
    let b = env.bounds;
    loop {
        let q = Pose2::new(
            rng.random_range(b.min[0]..=b.max[0]),
            rng.random_range(b.min[1]..=b.max[1]),
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        );
        if env.clearance(robot, &q) > 0.0 {
            return q;
        }
    }
}

/// Random walks with the noisy plant and its filter, recording
/// `(project(x̂_t), d)` pairs. A walk restarts from a fresh collision-free
/// pose after a collision, on leaving the workspace, or after
/// `walk_length` steps.
pub fn collect_training_data(
    env: &Environment,
    robot: &RobotFootprint,
    system: &RobotSystem,
    options: &CollectOptions,
    seed: u64,
) -> Result<TrainingSet, HarnessError> {
    if options.n_samples == 0 || options.walk_length == 0 || options.record_every == 0 {
        return Err(HarnessError::Config("sample count, walk length and record stride must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut set = TrainingSet {
        inputs: Vec::with_capacity(options.n_samples),
        targets: Vec::with_capacity(options.n_samples),
        estimates: Vec::with_capacity(options.n_samples),
        provenance: Provenance {
            environment_seed: env.seed,
            plant: system.name().into(),
            collection_seed: seed,
            pairing: options.pairing,
            input_map: options.input_map,
        },
    };
    let inside = |q: &Pose2| env.bounds.contains(&Point::new(q.x, q.y));
    let record = |set: &mut TrainingSet, truth: Pose2, est: Pose2| -> bool {
        if !(inside(&truth) && inside(&est)) {
            return false;
        }
        let at = match options.pairing {
            Pairing::EstimateTrue => truth,
            Pairing::EstimateEstimate => est,
        };
        set.inputs.push(options.input_map.project(&est));
        set.targets.push(env.clearance(robot, &at));
        set.estimates.push(est);
        true
    };
    'walks: while set.len() < options.n_samples {
        let start = free_pose(env, robot, &mut rng);
        match system {
            RobotSystem::Linear(sys) => {
                let mut truth = Vector2::new(start.x, start.y);
                let mut belief: Belief<2> = sys.initial_belief(&start);
                for step in 1..=options.walk_length {
                    let r = sys.plant.u_max * rng.random::<f64>().sqrt();
                    let a = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                    let u = Vector2::new(r * a.cos(), r * a.sin());
                    sys.advance(&mut truth, &mut belief, &u, &mut rng)?;
                    let tq = Pose2::new(truth[0], truth[1], 0.0);
                    let eq = Pose2::new(belief.mean[0], belief.mean[1], 0.0);
                    if step % options.record_every == 0 && !record(&mut set, tq, eq) {
                        continue 'walks;
                    }
                    if set.len() == options.n_samples || env.clearance(robot, &tq) <= 0.0 || !inside(&tq) {
                        continue 'walks;
                    }
                }
            }
            RobotSystem::Dubins(sys) => {
                let mut truth = Vector3::new(start.x, start.y, start.theta);
                let mut belief: Belief<3> = sys.initial_belief(&start);
                for step in 1..=options.walk_length {
                    let w = rng.random_range(-sys.plant.omega_max..=sys.plant.omega_max);
                    sys.advance(&mut truth, &mut belief, w, &mut rng)?;
                    let tq = Pose2::new(truth[0], truth[1], truth[2]);
                    let eq = Pose2::new(belief.mean[0], belief.mean[1], belief.mean[2]);
                    if step % options.record_every == 0 && !record(&mut set, tq, eq) {
                        continue 'walks;
                    }
                    if set.len() == options.n_samples || env.clearance(robot, &tq) <= 0.0 || !inside(&tq) {
                        continue 'walks;
                    }
                }
            }
        }
    }
    Ok(set)
}
