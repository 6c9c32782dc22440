use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::geometry::{Environment, RobotFootprint};
use crate::planners::Plan;
use crate::robots::{GoalRegion, Outcome, RobotSystem};

/// Independent stream for one trial: the same `(seed, trial)` always gives
/// the same noise, whatever order trials run in.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Deterministic child seed for a labelled sub-task.
pub fn derive_seed(master: u64, labels: &[u64]) -> u64 {
    use rand::RngCore;
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    for &l in labels {
        rng.set_stream(l);
        rng = ChaCha8Rng::seed_from_u64(rng.next_u64());
    }
    rng.next_u64()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialBatch {
    pub n_trials: usize,
    pub outcomes: Vec<Outcome>,
    /// Smallest true-state distance to collision reached in each trial.
    pub min_distances: Vec<f64>,
    pub path_length: f64,
}

impl TrialBatch {
    pub fn count(&self, outcome: Outcome) -> usize {
        self.outcomes.iter().filter(|&&o| o == outcome).count()
    }

    pub fn success_rate(&self) -> f64 {
        self.count(Outcome::Success) as f64 / self.n_trials as f64
    }

    pub fn collision_rate(&self) -> f64 {
        self.count(Outcome::Collision) as f64 / self.n_trials as f64
    }

    pub fn timeout_rate(&self) -> f64 {
        self.count(Outcome::Timeout) as f64 / self.n_trials as f64
    }

    /// Fraction of trials whose minimum distance reached zero.
    pub fn fraction_nonpositive(&self) -> f64 {
        self.min_distances.iter().filter(|&&d| d <= 0.0).count() as f64 / self.n_trials as f64
    }
}

/// Runs `n_trials` closed-loop rollouts of `plan`. Trial `i` draws its noise
/// from `trial_rng(seed, i)`.
pub fn evaluate_plan(
    plan: &Plan,
    goal: &GoalRegion,
    env: &Environment,
    robot: &RobotFootprint,
    system: &RobotSystem,
    n_trials: usize,
    seed: u64,
) -> Result<TrialBatch, HarnessError> {
    if n_trials == 0 {
        return Err(HarnessError::Config("trial count must be positive".into()));
    }
    if plan.segments.is_empty() {
        return Err(HarnessError::Config("plan has no segments".into()));
    }
    let results: Vec<(Outcome, f64)> = (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(seed, i as u64);
            system.track(&plan.segments, goal, env, robot, &mut rng).map(|r| (r.outcome, r.min_distance))
        })
        .collect::<Result<_, _>>()?;
    let (outcomes, min_distances) = results.into_iter().unzip();
    Ok(TrialBatch { n_trials, outcomes, min_distances, path_length: plan.length })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges; zero is always an edge.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub fraction_nonpositive: f64,
}

impl Histogram {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count\n");
        for (w, c) in self.edges.windows(2).zip(&self.counts) {
            out.push_str(&format!("{},{},{}\n", w[0], w[1], c));
        }
        out
    }
}

/// Equal-width bins of the per-trial minimum distances, aligned so that
/// zero falls on a bin edge. Values `≤ 0` land in bins below that edge.
pub fn min_distance_histogram(batch: &TrialBatch, bin_width: f64) -> Result<Histogram, HarnessError> {
    if !(bin_width > 0.0) || batch.min_distances.is_empty() {
        return Err(HarnessError::Config("histogram needs a positive bin width and data".into()));
    }
    let lo = batch.min_distances.iter().copied().fold(0.0, f64::min);
    let hi = batch.min_distances.iter().copied().fold(0.0, f64::max);
    // bins are (a, b]; index k covers ((k - 1)·w, k·w]
    let k_lo = (lo / bin_width).ceil() as i64;
    let k_hi = ((hi / bin_width).ceil() as i64).max(k_lo + 1);
    let n = (k_hi - k_lo + 1) as usize;
    let mut counts = vec![0; n];
    for &d in &batch.min_distances {
        let k = ((d / bin_width).ceil() as i64).clamp(k_lo, k_hi);
        counts[(k - k_lo) as usize] += 1;
    }
    let edges = (k_lo - 1..=k_hi).map(|k| k as f64 * bin_width).collect();
    Ok(Histogram { edges, counts, fraction_nonpositive: batch.fraction_nonpositive() })
}
