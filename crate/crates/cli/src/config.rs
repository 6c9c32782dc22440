//! Run configuration. Every field has a default, so an empty file is a
//! valid configuration and `dump-defaults` prints the complete schema.

use std::path::{Path, PathBuf};

use ccgp::chance::{ConnectOptions, InputMap};
use ccgp::geometry::{generate_environment, import_occupancy_grid, Bounds, Environment, GenerateParams, RobotFootprint};
use ccgp::gp::LENGTH_SCALE_GRID;
use ccgp::harness::{
    derive_seed, CollectOptions, DensitySettings, GpSettings, PairOptions, PairSampler, Pairing, PlannerSpec, SweepSettings,
};
use ccgp::planners::{PlannerOptions, Steering};
use ccgp::robots::{DubinsPlant, DubinsSystem, LinearPlant, LinearSystem, RobotSystem};
use ccgp::shgo::ShgoOptions;
use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Training samples per environment at desk scale.
pub const DESK_SAMPLES: usize = 500;
/// Planner iterations at desk scale.
pub const DESK_ITERATIONS: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed; every other seed is derived from it.
    pub seed: u64,
    pub output: PathBuf,
    pub plant: PlantConfig,
    pub robot: RobotConfig,
    pub environment: EnvironmentConfig,
    pub gp: GpConfig,
    pub sweep: SweepConfig,
    pub planner: PlannerConfig,
    pub connect: ConnectConfig,
    pub density: DensityConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            output: PathBuf::from("runs/default"),
            plant: PlantConfig::default(),
            robot: RobotConfig::default(),
            environment: EnvironmentConfig::default(),
            gp: GpConfig::default(),
            sweep: SweepConfig::default(),
            planner: PlannerConfig::default(),
            connect: ConnectConfig::default(),
            density: DensityConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PlantKind {
    #[default]
    Linear,
    Dubins,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantConfig {
    pub kind: PlantKind,
    pub linear: LinearConfig,
    pub dubins: DubinsConfig,
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig { kind: PlantKind::Linear, linear: LinearConfig::default(), dubins: DubinsConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearConfig {
    /// Isotropic motion-noise variance per step.
    pub motion_variance: f64,
    pub observation_variance: f64,
    pub u_max: f64,
    /// Reference spacing along the plan, meters per step.
    pub step_length: f64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        let p = LinearPlant::default();
        LinearConfig {
            motion_variance: p.motion_cov[(0, 0)],
            observation_variance: p.observation_cov[(0, 0)],
            u_max: p.u_max,
            step_length: LinearSystem::default().step_length,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DubinsConfig {
    pub speed: f64,
    pub tau: f64,
    pub omega_max: f64,
    pub speed_noise: f64,
    pub omega_noise: f64,
    pub rotation_noise_deg: f64,
    pub position_observation_variance: f64,
    pub heading_observation_variance: f64,
    /// Turning radius of the planner's Dubins steering.
    pub rho: f64,
}

impl Default for DubinsConfig {
    fn default() -> Self {
        let p = DubinsPlant::default();
        DubinsConfig {
            speed: p.speed,
            tau: p.tau,
            omega_max: p.omega_max,
            speed_noise: p.speed_noise,
            omega_noise: p.omega_noise,
            rotation_noise_deg: p.rotation_noise.to_degrees(),
            position_observation_variance: p.observation_cov[(0, 0)],
            heading_observation_variance: p.observation_cov[(2, 2)],
            rho: 1.0,
        }
    }
}

/// Disc footprint for the linear robot, rectangle for the car.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotConfig {
    pub radius: f64,
    pub length: f64,
    pub width: f64,
}

impl Default for RobotConfig {
    fn default() -> Self {
        RobotConfig { radius: 0.2, length: 0.4, width: 0.2 }
    }
}

/// Exactly one of `generate` and `grid`. Without an `[environment]` table
/// the generated default applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    #[serde(default)]
    pub generate: Option<GenerateConfig>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
}

impl Default for EnvironmentConfig {
    fn default() -> Self {
        EnvironmentConfig { generate: Some(GenerateConfig::default()), grid: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    /// One environment per seed.
    pub seeds: Vec<u64>,
    pub n_obstacles: usize,
    pub min: [f64; 2],
    pub max: [f64; 2],
    pub size_range: [f64; 2],
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig { seeds: vec![0, 1, 2], n_obstacles: 10, min: [0.0, 0.0], max: [20.0, 20.0], size_range: [1.0, 3.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// PGM image or 0/1 text grid; relative paths resolve against the
    /// config file's directory.
    pub path: PathBuf,
    /// Meters per cell.
    pub resolution: f64,
    #[serde(default = "yes")]
    pub merge: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GpConfig {
    pub n_samples: usize,
    pub noise_variance: f64,
    /// Fixed length scale; when absent one is chosen on the grid.
    pub length_scale: Option<f64>,
    /// Candidates as multiples of `diagonal / 10`.
    pub length_scale_grid: Vec<f64>,
    pub pairing: Pairing,
    pub walk_length: usize,
    pub record_every: usize,
    /// Adds `(h·cos θ, h·sin θ)` to the GP input when set.
    pub heading_weight: Option<f64>,
}

impl Default for GpConfig {
    fn default() -> Self {
        let c = CollectOptions::default();
        GpConfig {
            n_samples: DESK_SAMPLES,
            noise_variance: 0.01,
            length_scale: None,
            length_scale_grid: LENGTH_SCALE_GRID.to_vec(),
            pairing: c.pairing,
            walk_length: c.walk_length,
            record_every: c.record_every,
            heading_weight: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub planners: Vec<PlannerSpec>,
    pub deltas: Vec<f64>,
    pub pairs_per_env: usize,
    pub trials: usize,
    pub min_separation: f64,
    pub goal_radius: f64,
    pub min_clearance: f64,
    /// Bin width of the per-plan minimum-distance histograms.
    pub histogram_bin: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            planners: vec![PlannerSpec::Rrt, PlannerSpec::RrtStar, PlannerSpec::Ccgp, PlannerSpec::CcgpStar],
            deltas: vec![0.01, 0.05, 0.1],
            pairs_per_env: 20,
            trials: 50,
            min_separation: 10.0,
            goal_radius: 0.5,
            min_clearance: 0.5,
            histogram_bin: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub max_iterations: usize,
    /// Seconds; absent means the iteration budget alone ends a run, which
    /// keeps reruns identical.
    pub time_limit: Option<f64>,
    pub goal_bias: f64,
    /// Longest edge.
    pub eta: f64,
    pub gamma: Option<f64>,
    /// Arc length between poses checked by the deterministic CONNECT.
    pub collision_resolution: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        let p = PlannerOptions::default();
        PlannerConfig {
            max_iterations: DESK_ITERATIONS,
            time_limit: None,
            goal_bias: p.goal_bias,
            eta: 1.0,
            gamma: None,
            collision_resolution: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConnectConfig {
    /// Samples per edge when no valid Lipschitz constant is known.
    pub n_samples: usize,
    pub local_tol: f64,
    pub local_budget: usize,
    pub epsilon: f64,
    pub min_samples: usize,
    pub max_samples: usize,
}

impl Default for ConnectConfig {
    fn default() -> Self {
        let c = ConnectOptions::default();
        ConnectConfig {
            n_samples: c.shgo.n_samples,
            local_tol: c.shgo.local_tol,
            local_budget: c.shgo.local_budget,
            epsilon: c.epsilon,
            min_samples: c.min_samples,
            max_samples: c.max_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityConfig {
    /// Run the obstacle-density study as part of `eval`.
    pub enabled: bool,
    pub obstacle_counts: Vec<usize>,
    pub env_seed: u64,
    pub segments: usize,
    pub segment_length: f64,
    pub n_pairs: usize,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    pub std: f64,
    pub planner: PlannerSpec,
    pub delta: f64,
}

impl Default for DensityConfig {
    fn default() -> Self {
        DensityConfig {
            enabled: false,
            obstacle_counts: vec![10, 20, 30],
            env_seed: 0,
            segments: 50,
            segment_length: 1.0,
            n_pairs: 20,
            start: [2.0, 2.0],
            goal: [18.0, 18.0],
            std: 0.5,
            planner: PlannerSpec::CcgpStar,
            delta: 0.05,
        }
    }
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    /// Reads and validates a TOML file. Relative grid paths are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        let mut config: RunConfig = toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        if let Some(grid) = &mut config.environment.grid {
            if grid.path.is_relative() {
                if let Some(dir) = path.parent() {
                    grid.path = dir.join(&grid.path);
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Full protocol counts: 200 pairs per environment, 100 trials, 2000
    /// training samples and 3000 planner iterations.
    pub fn paper_scale(mut self) -> Self {
        self.sweep.pairs_per_env = 200;
        self.sweep.trials = 100;
        self.gp.n_samples = CollectOptions::default().n_samples;
        self.planner.max_iterations = PlannerOptions::default().max_iterations;
        self
    }

    pub fn validate(&self) -> Result<(), CliError> {
        match (&self.environment.generate, &self.environment.grid) {
            (Some(_), Some(_)) => return Err(config_error("environment: give either `generate` or `grid`, not both")),
            (None, None) => return Err(config_error("environment: one of `generate` or `grid` is required")),
            (Some(g), None) => {
                if g.seeds.is_empty() {
                    return Err(config_error("environment.generate.seeds is empty"));
                }
                Bounds::new(g.min, g.max).map_err(|e| config_error(e.to_string()))?;
                if !(g.size_range[0] > 0.0 && g.size_range[0] <= g.size_range[1]) {
                    return Err(config_error("environment.generate.size_range must satisfy 0 < lo ≤ hi"));
                }
            }
            (None, Some(g)) => {
                if !g.path.is_file() {
                    return Err(config_error(format!("environment.grid.path {} does not exist", g.path.display())));
                }
                if !(g.resolution > 0.0) {
                    return Err(config_error("environment.grid.resolution must be positive"));
                }
            }
        }
        for &d in self.sweep.deltas.iter().chain(std::iter::once(&self.density.delta)) {
            if !(d > 0.0 && d < 0.5) {
                return Err(config_error(format!("δ must lie in (0, 0.5), got {d}")));
            }
        }
        if self.sweep.planners.is_empty() {
            return Err(config_error("sweep.planners is empty"));
        }
        if self.sweep.planners.iter().any(|p| p.is_chance()) && self.sweep.deltas.is_empty() {
            return Err(config_error("chance planners need at least one δ"));
        }
        if self.gp.n_samples == 0 || self.sweep.trials == 0 || self.sweep.pairs_per_env == 0 {
            return Err(config_error("gp.n_samples, sweep.trials and sweep.pairs_per_env must be positive"));
        }
        if !(self.gp.noise_variance > 0.0) {
            return Err(config_error("gp.noise_variance must be positive"));
        }
        if self.gp.length_scale.is_none() && self.gp.length_scale_grid.is_empty() {
            return Err(config_error("gp needs a fixed length_scale or a non-empty grid"));
        }
        let positive = [
            ("planner.eta", self.planner.eta),
            ("planner.collision_resolution", self.planner.collision_resolution),
            ("sweep.goal_radius", self.sweep.goal_radius),
            ("sweep.histogram_bin", self.sweep.histogram_bin),
            ("plant.dubins.rho", self.plant.dubins.rho),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(config_error(format!("{name} must be positive, got {v}")));
        }
        if !(0.0..=1.0).contains(&self.planner.goal_bias) {
            return Err(config_error("planner.goal_bias must lie in [0, 1]"));
        }
        self.robot()?;
        Ok(())
    }

    pub fn robot(&self) -> Result<RobotFootprint, CliError> {
        let r = match self.plant.kind {
            PlantKind::Linear => RobotFootprint::disc(self.robot.radius),
            PlantKind::Dubins => RobotFootprint::rectangle(self.robot.length, self.robot.width),
        };
        r.map_err(|e| config_error(format!("robot: {e}")))
    }

    pub fn system(&self) -> RobotSystem {
        match self.plant.kind {
            PlantKind::Linear => {
                let c = &self.plant.linear;
                RobotSystem::Linear(LinearSystem {
                    plant: LinearPlant {
                        motion_cov: Matrix2::identity() * c.motion_variance,
                        observation_cov: Matrix2::identity() * c.observation_variance,
                        u_max: c.u_max,
                    },
                    step_length: c.step_length,
                    ..Default::default()
                })
            }
            PlantKind::Dubins => {
                let c = &self.plant.dubins;
                let (p, h) = (c.position_observation_variance, c.heading_observation_variance);
                RobotSystem::Dubins(DubinsSystem {
                    plant: DubinsPlant {
                        speed: c.speed,
                        tau: c.tau,
                        omega_max: c.omega_max,
                        speed_noise: c.speed_noise,
                        omega_noise: c.omega_noise,
                        rotation_noise: c.rotation_noise_deg.to_radians(),
                        observation_cov: Matrix3::from_diagonal(&Vector3::new(p, p, h)),
                    },
                    ..Default::default()
                })
            }
        }
    }

    pub fn input_map(&self) -> InputMap {
        match self.gp.heading_weight {
            Some(weight) => InputMap::PositionHeading { weight },
            None => InputMap::Position,
        }
    }

    pub fn steering(&self) -> Steering {
        match self.plant.kind {
            PlantKind::Linear => Steering::Line { eta: self.planner.eta },
            PlantKind::Dubins => Steering::Dubins { rho: self.plant.dubins.rho, eta: self.planner.eta },
        }
    }

    pub fn gp_settings(&self) -> GpSettings {
        GpSettings {
            collect: CollectOptions {
                n_samples: self.gp.n_samples,
                pairing: self.gp.pairing,
                input_map: self.input_map(),
                walk_length: self.gp.walk_length,
                record_every: self.gp.record_every,
            },
            noise_variance: self.gp.noise_variance,
            length_scale: self.gp.length_scale,
            length_scale_grid: self.gp.length_scale_grid.clone(),
        }
    }

    pub fn connect_options(&self) -> ConnectOptions {
        let c = &self.connect;
        ConnectOptions {
            input_map: self.input_map(),
            shgo: ShgoOptions { n_samples: c.n_samples, local_tol: c.local_tol, local_budget: c.local_budget, lipschitz_hint: None },
            lipschitz: None,
            epsilon: c.epsilon,
            min_samples: c.min_samples,
            max_samples: c.max_samples,
        }
    }

    pub fn planner_options(&self) -> PlannerOptions {
        let p = &self.planner;
        PlannerOptions { max_iterations: p.max_iterations, time_limit: p.time_limit, goal_bias: p.goal_bias, gamma: p.gamma }
    }

    pub fn sweep_settings(&self) -> SweepSettings {
        SweepSettings {
            planners: self.sweep.planners.clone(),
            deltas: self.sweep.deltas.clone(),
            trials: self.sweep.trials,
            steering: self.steering(),
            planner: self.planner_options(),
            connect: self.connect_options(),
            collision_resolution: self.planner.collision_resolution,
        }
    }

    pub fn pair_options(&self) -> PairOptions {
        PairOptions {
            sampler: PairSampler::Uniform { min_separation: self.sweep.min_separation },
            goal_radius: self.sweep.goal_radius,
            min_clearance: self.sweep.min_clearance,
            headings: self.plant.kind == PlantKind::Dubins,
            ..Default::default()
        }
    }

    pub fn density_settings(&self) -> Result<DensitySettings, CliError> {
        let g = self.environment.generate.clone().unwrap_or_default();
        let d = &self.density;
        Ok(DensitySettings {
            obstacle_counts: d.obstacle_counts.clone(),
            generate: GenerateParams {
                n_obstacles: 0,
                bounds: Bounds::new(g.min, g.max).map_err(|e| config_error(e.to_string()))?,
                size_range: (g.size_range[0], g.size_range[1]),
            },
            env_seed: d.env_seed,
            segments: d.segments,
            segment_length: d.segment_length,
            pairs: PairOptions {
                sampler: PairSampler::Gaussian { start: d.start, goal: d.goal, std: d.std },
                ..self.pair_options()
            },
            n_pairs: d.n_pairs,
            planner: d.planner,
            delta: d.delta,
        })
    }

    /// The configured environments in index order.
    pub fn environments(&self) -> Result<Vec<Environment>, CliError> {
        if let Some(g) = &self.environment.generate {
            let params = GenerateParams {
                n_obstacles: g.n_obstacles,
                bounds: Bounds::new(g.min, g.max).map_err(|e| config_error(e.to_string()))?,
                size_range: (g.size_range[0], g.size_range[1]),
            };
            return g
                .seeds
                .iter()
                .map(|&s| generate_environment(s, &params).map_err(|e| config_error(e.to_string())))
                .collect();
        }
        let grid = self.environment.grid.as_ref().ok_or_else(|| config_error("no environment source"))?;
        let bytes = std::fs::read(&grid.path).map_err(|e| config_error(format!("{}: {e}", grid.path.display())))?;
        let mut env = import_occupancy_grid(&bytes, grid.resolution, grid.merge).map_err(|e| config_error(e.to_string()))?;
        env.seed = derive_seed(self.seed, &[0]);
        Ok(vec![env])
    }
}
