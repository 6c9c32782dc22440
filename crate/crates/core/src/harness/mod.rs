//! Training-data collection, Monte-Carlo plan evaluation, and the experiment
//! protocols built on them.

pub mod collect;
pub mod evaluate;
pub mod experiment;

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::gp::GpError;
use crate::robots::ControlError;

pub use collect::{collect_training_data, CollectOptions, Pairing, Provenance, TrainingSet};
pub use evaluate::{derive_seed, evaluate_plan, min_distance_histogram, trial_rng, Histogram, TrialBatch};
pub use experiment::{
    build_model, fit_model, pair_seeds, evaluate_outcomes, plan_pair, plan_scenario, problem_for, random_segments, run_delta_sweep,
    run_density_study, sample_pairs, summarize, sweep_keys, time_edge_evaluations, DensityRow, DensitySettings,
    EnvironmentDescriptor, ExperimentReport, FitReport, GpSettings, Pair, PairOptions, PairRecord, PairSampler,
    PlanKey, PlanOutcome, PlannerSpec, Quartiles, Scenario, SummaryRow, SweepResult, SweepSettings,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("report output: {0}")]
    Io(String),
}
