use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::statistics::{Data, Distribution as _, Max, Min, OrderStatistics};

use super::evaluate::{derive_seed, evaluate_plan, TrialBatch};
use super::{collect_training_data, CollectOptions, HarnessError, TrainingSet};
use crate::chance::{connect, point_satisfies, ChanceConstraint, ConnectOptions, Segment};
use crate::geometry::{generate_environment, Bounds, Environment, GenerateParams, Point, Pose2, RobotFootprint};
use crate::gp::{lipschitz_q, select_length_scale_from, GpDistanceModel, Kernel, LipschitzBound, LENGTH_SCALE_GRID};
use crate::planners::{
    ccgp, rrt, rrt_star, CollisionValidator, Plan, PlannerKind, PlannerOptions, PlanningProblem, Steering,
};
use crate::robots::{GoalRegion, RobotSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlannerSpec {
    #[serde(rename = "rrt")]
    Rrt,
    #[serde(rename = "rrt*")]
    RrtStar,
    #[serde(rename = "ccgp")]
    Ccgp,
    #[serde(rename = "ccgp*")]
    CcgpStar,
}

impl PlannerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PlannerSpec::Rrt => "rrt",
            PlannerSpec::RrtStar => "rrt*",
            PlannerSpec::Ccgp => "ccgp",
            PlannerSpec::CcgpStar => "ccgp*",
        }
    }

    pub fn kind(&self) -> PlannerKind {
        match self {
            PlannerSpec::Rrt | PlannerSpec::Ccgp => PlannerKind::Rrt,
            PlannerSpec::RrtStar | PlannerSpec::CcgpStar => PlannerKind::RrtStar,
        }
    }

    /// Whether the planner uses the chance CONNECT (and so depends on δ).
    pub fn is_chance(&self) -> bool {
        matches!(self, PlannerSpec::Ccgp | PlannerSpec::CcgpStar)
    }
}

impl fmt::Display for PlannerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlannerSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rrt" => Ok(PlannerSpec::Rrt),
            "rrt*" => Ok(PlannerSpec::RrtStar),
            "ccgp" => Ok(PlannerSpec::Ccgp),
            "ccgp*" => Ok(PlannerSpec::CcgpStar),
            other => Err(HarnessError::Config(format!("unknown planner {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpSettings {
    pub collect: CollectOptions,
    pub noise_variance: f64,
    /// Fixed length scale; `None` picks one on the grid by marginal likelihood.
    pub length_scale: Option<f64>,
    /// Candidate length scales as multiples of `diagonal / 10`.
    pub length_scale_grid: Vec<f64>,
}

impl Default for GpSettings {
    fn default() -> Self {
        GpSettings {
            collect: CollectOptions::default(),
            noise_variance: 0.01,
            length_scale: None,
            length_scale_grid: LENGTH_SCALE_GRID.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub length_scale: f64,
    /// `(ℓ, log marginal likelihood)` for every grid candidate.
    pub lml_scores: Vec<(f64, f64)>,
    pub noise_variance: f64,
    pub jitter: f64,
    pub lipschitz: LipschitzBound,
}

impl FitReport {
    /// `base` with the Lipschitz constant filled in when the bound is valid.
    pub fn connect_options(&self, base: &ConnectOptions) -> ConnectOptions {
        ConnectOptions { lipschitz: self.lipschitz.valid.then(|| self.lipschitz.composed()), ..*base }
    }
}

/// Fits the distance model to a training set.
pub fn fit_model(set: &TrainingSet, bounds: &Bounds, gp: &GpSettings) -> Result<(GpDistanceModel, FitReport), HarnessError> {
    let (length_scale, lml_scores) = match gp.length_scale {
        Some(l) => (l, Vec::new()),
        None => {
            let grid: Vec<f64> = gp.length_scale_grid.iter().map(|m| m * bounds.diagonal() / 10.0).collect();
            select_length_scale_from(&set.inputs, &set.targets, gp.noise_variance, &grid)?
        }
    };
    let model = GpDistanceModel::fit(&set.inputs, &set.targets, Kernel::rbf(length_scale)?, gp.noise_variance)?;
    let lipschitz = lipschitz_q(&model)?;
    let report = FitReport { length_scale, lml_scores, noise_variance: gp.noise_variance, jitter: model.jitter(), lipschitz };
    Ok((model, report))
}

/// Collects training data in `env` and fits the model to it.
pub fn build_model(
    env: &Environment,
    robot: &RobotFootprint,
    system: &RobotSystem,
    gp: &GpSettings,
    seed: u64,
) -> Result<(TrainingSet, GpDistanceModel, FitReport), HarnessError> {
    let set = collect_training_data(env, robot, system, &gp.collect, seed)?;
    let (model, report) = fit_model(&set, &env.bounds, gp)?;
    Ok((set, model, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub start: Pose2,
    pub goal: GoalRegion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PairSampler {
    /// Uniform over the workspace, at least `min_separation` apart.
    Uniform { min_separation: f64 },
    /// Independent normals around fixed means.
    Gaussian { start: [f64; 2], goal: [f64; 2], std: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairOptions {
    pub sampler: PairSampler,
    pub goal_radius: f64,
    /// Nominal clearance required at both ends.
    pub min_clearance: f64,
    /// Draw headings (Dubins) or keep them at zero.
    pub headings: bool,
    pub max_attempts: usize,
}

impl Default for PairOptions {
    fn default() -> Self {
        PairOptions {
            sampler: PairSampler::Uniform { min_separation: 10.0 },
            goal_radius: 0.5,
            min_clearance: 0.5,
            headings: false,
            max_attempts: 100_000,
        }
    }
}

/// Draws start/goal pairs whose ends clear the obstacles by
/// `min_clearance` and pass `accept`.
pub fn sample_pairs(
    env: &Environment,
    robot: &RobotFootprint,
    n: usize,
    options: &PairOptions,
    accept: &dyn Fn(&Pose2) -> bool,
    seed: u64,
) -> Result<Vec<Pair>, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = env.bounds;
    let heading = |rng: &mut ChaCha8Rng| if options.headings { rng.random_range(-std::f64::consts::PI..std::f64::consts::PI) } else { 0.0 };
    let ok = |q: &Pose2| env.bounds.contains(&Point::new(q.x, q.y)) && env.clearance(robot, q) >= options.min_clearance && accept(q);
    let mut pairs = Vec::with_capacity(n);
    let mut attempts = 0;
    while pairs.len() < n {
        attempts += 1;
        if attempts > options.max_attempts {
            return Err(HarnessError::Config(format!("found only {} of {n} start/goal pairs", pairs.len())));
        }
        let (s, g) = match options.sampler {
            PairSampler::Uniform { .. } => {
                let draw = |rng: &mut ChaCha8Rng| {
                    let x = rng.random_range(b.min[0]..=b.max[0]);
                    let y = rng.random_range(b.min[1]..=b.max[1]);
                    Pose2::new(x, y, heading(rng))
                };
                (draw(&mut rng), draw(&mut rng))
            }
            PairSampler::Gaussian { start, goal, std } => {
                let normal = Normal::new(0.0, std).map_err(|e| HarnessError::Config(e.to_string()))?;
                let draw = |rng: &mut ChaCha8Rng, m: [f64; 2]| {
                    let x = m[0] + normal.sample(rng);
                    let y = m[1] + normal.sample(rng);
                    Pose2::new(x, y, heading(rng))
                };
                (draw(&mut rng, start), draw(&mut rng, goal))
            }
        };
        if let PairSampler::Uniform { min_separation } = options.sampler {
            if (s.x - g.x).hypot(s.y - g.y) < min_separation {
                continue;
            }
        }
        if ok(&s) && ok(&g) {
            pairs.push(Pair { start: s, goal: GoalRegion::disc(g, options.goal_radius) });
        }
    }
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub planners: Vec<PlannerSpec>,
    pub deltas: Vec<f64>,
    pub trials: usize,
    pub steering: Steering,
    pub planner: PlannerOptions,
    pub connect: ConnectOptions,
    /// Arc length between poses checked by the deterministic CONNECT.
    pub collision_resolution: f64,
}

/// One environment with its model and start/goal pairs.
pub struct Scenario<'a> {
    pub index: usize,
    pub env: &'a Environment,
    pub model: Option<&'a GpDistanceModel>,
    pub connect: ConnectOptions,
    pub pairs: &'a [Pair],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanKey {
    pub env: usize,
    pub pair: usize,
    pub planner: PlannerSpec,
    pub delta: Option<f64>,
}

impl PlanKey {
    /// File-name stem, e.g. `e0_p3_ccgp-star_d0.05`.
    pub fn stem(&self) -> String {
        let planner = self.planner.name().replace('*', "-star");
        match self.delta {
            Some(d) => format!("e{}_p{}_{}_d{}", self.env, self.pair, planner, d),
            None => format!("e{}_p{}_{}", self.env, self.pair, planner),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanOutcome {
    pub key: PlanKey,
    pub problem: PlanningProblem,
    pub plan: Result<Plan, String>,
}

/// Seeds shared by every planner on a pair, so the planners differ only in
/// their CONNECT and the rollouts share their noise.
pub fn pair_seeds(master: u64, env: usize, pair: usize) -> (u64, u64) {
    (derive_seed(master, &[env as u64, pair as u64, 0]), derive_seed(master, &[env as u64, pair as u64, 1]))
}

/// Plans one pair with one planner.
pub fn plan_pair(
    key: &PlanKey,
    problem: &PlanningProblem,
    scenario: &Scenario,
    robot: &RobotFootprint,
    settings: &SweepSettings,
) -> Result<Plan, String> {
    let result = if key.planner.is_chance() {
        let model = scenario.model.ok_or("chance planner needs a model")?;
        let delta = key.delta.ok_or("chance planner needs δ")?;
        ccgp(problem, key.planner.kind(), model, delta, scenario.connect)
    } else {
        let mut v = CollisionValidator::new(scenario.env, robot, settings.collision_resolution);
        match key.planner.kind() {
            PlannerKind::Rrt => rrt(problem, &mut v),
            PlannerKind::RrtStar => rrt_star(problem, &mut v),
        }
    };
    result.map_err(|e| e.to_string())
}

/// Every `(pair, planner, δ)` job of a scenario, in report order.
pub fn sweep_keys(scenario: &Scenario, settings: &SweepSettings) -> Vec<PlanKey> {
    let mut keys = Vec::new();
    for pair in 0..scenario.pairs.len() {
        for &planner in &settings.planners {
            if planner.is_chance() {
                for &d in &settings.deltas {
                    keys.push(PlanKey { env: scenario.index, pair, planner, delta: Some(d) });
                }
            } else {
                keys.push(PlanKey { env: scenario.index, pair, planner, delta: None });
            }
        }
    }
    keys
}

pub fn problem_for(scenario: &Scenario, key: &PlanKey, settings: &SweepSettings, master: u64) -> PlanningProblem {
    let pair = &scenario.pairs[key.pair];
    PlanningProblem {
        start: pair.start,
        goal: pair.goal,
        bounds: scenario.env.bounds,
        steering: settings.steering,
        options: settings.planner,
        seed: pair_seeds(master, key.env, key.pair).0,
    }
}

/// Plans every job of the scenario. Jobs run in parallel; results come back
/// in key order. Wall-clock seconds per job are returned separately.
pub fn plan_scenario(
    scenario: &Scenario,
    robot: &RobotFootprint,
    settings: &SweepSettings,
    master: u64,
) -> Vec<(PlanOutcome, f64)> {
    sweep_keys(scenario, settings)
        .into_par_iter()
        .map(|key| {
            let problem = problem_for(scenario, &key, settings, master);
            let t = Instant::now();
            let plan = plan_pair(&key, &problem, scenario, robot, settings);
            (PlanOutcome { key, problem, plan }, t.elapsed().as_secs_f64())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub env: usize,
    pub env_seed: u64,
    pub pair: usize,
    pub planner: PlannerSpec,
    pub delta: Option<f64>,
    pub planned: bool,
    pub failure: Option<String>,
    pub iterations: Option<usize>,
    pub nodes: Option<usize>,
    pub connect_calls: Option<usize>,
    pub length: Option<f64>,
    pub min_c_hat: Option<f64>,
    pub trials: usize,
    pub successes: usize,
    pub collisions: usize,
    pub timeouts: usize,
    pub success_rate: Option<f64>,
}

impl PairRecord {
    pub fn new(outcome: &PlanOutcome, env_seed: u64, batch: Option<&TrialBatch>) -> Self {
        use crate::robots::Outcome;
        let plan = outcome.plan.as_ref().ok();
        PairRecord {
            env: outcome.key.env,
            env_seed,
            pair: outcome.key.pair,
            planner: outcome.key.planner,
            delta: outcome.key.delta,
            planned: plan.is_some(),
            failure: outcome.plan.as_ref().err().cloned(),
            iterations: plan.map(|p| p.meta.iterations),
            nodes: plan.map(|p| p.meta.nodes),
            connect_calls: plan.map(|p| p.meta.connect_calls),
            length: plan.map(|p| p.length),
            min_c_hat: plan.and_then(|p| p.edge_c_hat.iter().flatten().copied().reduce(f64::min)),
            trials: batch.map_or(0, |b| b.n_trials),
            successes: batch.map_or(0, |b| b.count(Outcome::Success)),
            collisions: batch.map_or(0, |b| b.count(Outcome::Collision)),
            timeouts: batch.map_or(0, |b| b.count(Outcome::Timeout)),
            success_rate: batch.map(|b| b.success_rate()),
        }
    }
}

/// Five-number summary with median-unbiased quantiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut d = Data::new(values.to_vec());
        Some(Quartiles {
            min: d.min(),
            q1: d.lower_quartile(),
            median: d.median(),
            q3: d.upper_quartile(),
            max: d.max(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub planner: PlannerSpec,
    pub delta: Option<f64>,
    pub pairs: usize,
    pub planned: usize,
    /// Over planned pairs.
    pub success_rate: Option<Quartiles>,
    pub path_length: Option<Quartiles>,
}

/// Groups records by `(planner, δ)` in order of first appearance.
pub fn summarize(records: &[PairRecord]) -> Vec<SummaryRow> {
    let mut groups: Vec<(PlannerSpec, Option<f64>, Vec<&PairRecord>)> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|g| g.0 == r.planner && g.1 == r.delta) {
            Some(g) => g.2.push(r),
            None => groups.push((r.planner, r.delta, vec![r])),
        }
    }
    groups
        .into_iter()
        .map(|(planner, delta, rs)| {
            let success: Vec<f64> = rs.iter().filter_map(|r| r.success_rate).collect();
            let length: Vec<f64> = rs.iter().filter_map(|r| r.length).collect();
            SummaryRow {
                planner,
                delta,
                pairs: rs.len(),
                planned: rs.iter().filter(|r| r.planned).count(),
                success_rate: Quartiles::of(&success),
                path_length: Quartiles::of(&length),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentDescriptor {
    pub index: usize,
    pub seed: u64,
    pub n_obstacles: usize,
    pub bounds: Bounds,
}

impl EnvironmentDescriptor {
    pub fn of(index: usize, env: &Environment) -> Self {
        EnvironmentDescriptor { index, seed: env.seed, n_obstacles: env.obstacles.len(), bounds: env.bounds }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub environments: Vec<EnvironmentDescriptor>,
    pub records: Vec<PairRecord>,
    pub summaries: Vec<SummaryRow>,
}

impl ExperimentReport {
    pub fn new(environments: Vec<EnvironmentDescriptor>, records: Vec<PairRecord>) -> Self {
        let summaries = summarize(&records);
        ExperimentReport { environments, records, summaries }
    }

    pub fn summary(&self, planner: PlannerSpec, delta: Option<f64>) -> Option<&SummaryRow> {
        self.summaries.iter().find(|s| s.planner == planner && s.delta == delta)
    }

    /// One row per planner × δ × pair.
    pub fn records_csv(&self) -> Result<String, HarnessError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r).map_err(|e| HarnessError::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| HarnessError::Io(e.to_string()))
    }
}

/// Plans, evaluates and aggregates.
pub struct SweepResult {
    pub report: ExperimentReport,
    pub outcomes: Vec<PlanOutcome>,
    pub batches: Vec<Option<TrialBatch>>,
    /// Planning wall time per outcome, seconds.
    pub plan_seconds: Vec<f64>,
}

pub fn evaluate_outcomes(
    scenario: &Scenario,
    outcomes: &[PlanOutcome],
    robot: &RobotFootprint,
    system: &RobotSystem,
    trials: usize,
    master: u64,
) -> Result<Vec<Option<TrialBatch>>, HarnessError> {
    outcomes
        .iter()
        .map(|o| match &o.plan {
            Ok(plan) => {
                let seed = pair_seeds(master, o.key.env, o.key.pair).1;
                evaluate_plan(plan, &o.problem.goal, scenario.env, robot, system, trials, seed).map(Some)
            }
            Err(_) => Ok(None),
        })
        .collect()
}

pub fn run_delta_sweep(
    scenarios: &[Scenario],
    robot: &RobotFootprint,
    system: &RobotSystem,
    settings: &SweepSettings,
    master: u64,
) -> Result<SweepResult, HarnessError> {
    if let Some(d) = settings.deltas.iter().find(|d| !(**d > 0.0 && **d < 0.5)) {
        return Err(HarnessError::Config(format!("δ must lie in (0, 0.5), got {d}")));
    }
    let mut outcomes = Vec::new();
    let mut batches = Vec::new();
    let mut plan_seconds = Vec::new();
    let mut records = Vec::new();
    for scenario in scenarios {
        let (planned, seconds): (Vec<PlanOutcome>, Vec<f64>) = plan_scenario(scenario, robot, settings, master).into_iter().unzip();
        let evaluated = evaluate_outcomes(scenario, &planned, robot, system, settings.trials, master)?;
        for (o, b) in planned.iter().zip(&evaluated) {
            records.push(PairRecord::new(o, scenario.env.seed, b.as_ref()));
        }
        outcomes.extend(planned);
        batches.extend(evaluated);
        plan_seconds.extend(seconds);
    }
    let environments = scenarios.iter().map(|s| EnvironmentDescriptor::of(s.index, s.env)).collect();
    Ok(SweepResult { report: ExperimentReport::new(environments, records), outcomes, batches, plan_seconds })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySettings {
    pub obstacle_counts: Vec<usize>,
    pub generate: GenerateParams,
    pub env_seed: u64,
    /// Random segments timed per environment.
    pub segments: usize,
    pub segment_length: f64,
    pub pairs: PairOptions,
    pub n_pairs: usize,
    pub planner: PlannerSpec,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub n_obstacles: usize,
    pub env_seed: u64,
    pub length_scale: f64,
    pub edge_time_mean: f64,
    pub edge_time_std: f64,
    pub plan_time_mean: Option<f64>,
    pub planned: usize,
    pub pairs: usize,
    /// Median Monte-Carlo success rate over planned pairs.
    pub median_accuracy: Option<f64>,
}

/// Segments of fixed length with uniformly drawn start and direction.
pub fn random_segments(bounds: &Bounds, n: usize, length: f64, seed: u64) -> Vec<Segment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x = rng.random_range(bounds.min[0]..=bounds.max[0]);
            let y = rng.random_range(bounds.min[1]..=bounds.max[1]);
            let a: f64 = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
            Segment::line(Pose2::new(x, y, 0.0), Pose2::new(x + length * a.cos(), y + length * a.sin(), 0.0))
        })
        .collect()
}

/// Mean and sample standard deviation of per-segment CONNECT wall time.
pub fn time_edge_evaluations(model: &GpDistanceModel, segments: &[Segment], delta: f64, options: &ConnectOptions) -> Result<(f64, f64), HarnessError> {
    let cc = ChanceConstraint::new(delta).map_err(|e| HarnessError::Config(e.to_string()))?;
    let times: Vec<f64> = segments
        .iter()
        .map(|s| {
            let t = Instant::now();
            std::hint::black_box(connect(model, s, &cc, options));
            t.elapsed().as_secs_f64()
        })
        .collect();
    let d = Data::new(times);
    Ok((d.mean().unwrap_or(f64::NAN), d.std_dev().unwrap_or(0.0)))
}

/// Obstacle-density study: one environment per obstacle count, each with a
/// model of the same size, the same timed segments, and the same pair
/// distribution.
pub fn run_density_study(
    density: &DensitySettings,
    gp: &GpSettings,
    sweep: &SweepSettings,
    robot: &RobotFootprint,
    system: &RobotSystem,
    master: u64,
) -> Result<Vec<DensityRow>, HarnessError> {
    let segments = random_segments(&density.generate.bounds, density.segments, density.segment_length, derive_seed(master, &[7]));
    let mut rows = Vec::new();
    for (i, &count) in density.obstacle_counts.iter().enumerate() {
        let params = GenerateParams { n_obstacles: count, ..density.generate };
        let env = generate_environment(density.env_seed, &params)?;
        let (_, model, fit) = build_model(&env, robot, system, gp, derive_seed(master, &[8, i as u64]))?;
        let connect_options = fit.connect_options(&sweep.connect);
        let (edge_time_mean, edge_time_std) = time_edge_evaluations(&model, &segments, density.delta, &connect_options)?;
        let cc = ChanceConstraint::new(density.delta).map_err(|e| HarnessError::Config(e.to_string()))?;
        let accept = |q: &Pose2| point_satisfies(&model, q, &cc, &connect_options.input_map);
        let pairs = sample_pairs(&env, robot, density.n_pairs, &density.pairs, &accept, derive_seed(master, &[9]))?;
        let scenario = Scenario { index: i, env: &env, model: Some(&model), connect: connect_options, pairs: &pairs };
        let settings = SweepSettings { planners: vec![density.planner], deltas: vec![density.delta], ..sweep.clone() };
        let (planned, seconds): (Vec<PlanOutcome>, Vec<f64>) = plan_scenario(&scenario, robot, &settings, master).into_iter().unzip();
        let batches = evaluate_outcomes(&scenario, &planned, robot, system, settings.trials, master)?;
        let accuracy: Vec<f64> = batches.iter().flatten().map(|b| b.success_rate()).collect();
        rows.push(DensityRow {
            n_obstacles: count,
            env_seed: density.env_seed,
            length_scale: fit.length_scale,
            edge_time_mean,
            edge_time_std,
            plan_time_mean: (!seconds.is_empty()).then(|| seconds.iter().sum::<f64>() / seconds.len() as f64),
            planned: accuracy.len(),
            pairs: pairs.len(),
            median_accuracy: Quartiles::of(&accuracy).map(|q| q.median),
        });
    }
    Ok(rows)
}
