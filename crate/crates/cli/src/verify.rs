//! Dense post-hoc audit of `g ≥ c` along every edge of a chance plan.

use std::path::Path;

use ccgp::chance::{threshold_from_delta, InputMap};
use ccgp::gp::GpDistanceModel;
use ccgp::harness::{sweep_keys, Pair, PlanOutcome, Scenario};
use ccgp::planners::Plan;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::layout::{read_json, read_text, write_json, Layout};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub edge: usize,
    pub t: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanAudit {
    pub plan: String,
    pub delta: f64,
    pub c: f64,
    pub edges: usize,
    pub points: usize,
    pub min_g: f64,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub points_per_edge: usize,
    pub tolerance: f64,
    pub plans: Vec<PlanAudit>,
    pub total_violations: usize,
}

impl VerifyReport {
    fn new(points_per_edge: usize, tolerance: f64, plans: Vec<PlanAudit>) -> Self {
        let total_violations = plans.iter().map(|p| p.violations.len()).sum();
        VerifyReport { points_per_edge, tolerance, plans, total_violations }
    }
}

/// Evaluates `g` at `points_per_edge` evenly spaced parameters on every edge,
/// endpoints included, and lists each `t` with `g < c − tolerance`.
pub fn audit_plan(
    name: &str,
    plan: &Plan,
    model: &GpDistanceModel,
    delta: f64,
    map: &InputMap,
    points_per_edge: usize,
    tolerance: f64,
) -> Result<PlanAudit, CliError> {
    if points_per_edge < 2 {
        return Err(CliError::Config("need at least two points per edge".into()));
    }
    let c = threshold_from_delta(delta).map_err(|e| CliError::Config(e.to_string()))?;
    let ts: Vec<f64> = (0..points_per_edge).map(|j| j as f64 / (points_per_edge - 1) as f64).collect();
    let mut min_g = f64::INFINITY;
    let mut violations = Vec::new();
    for (edge, seg) in plan.segments.iter().enumerate() {
        let xs: Vec<Vec<f64>> = ts.iter().map(|&t| map.project(&seg.at(t))).collect();
        for (&t, g) in ts.iter().zip(model.g_batch(&xs)) {
            min_g = min_g.min(g);
            if g < c - tolerance {
                violations.push(Violation { edge, t, g });
            }
        }
    }
    Ok(PlanAudit {
        plan: name.to_string(),
        delta,
        c,
        edges: plan.segments.len(),
        points: plan.segments.len() * points_per_edge,
        min_g,
        violations,
    })
}

/// Audits every chance plan of a run directory against its environment's
/// model at the plan's own δ, and writes `verify.json`.
pub fn verify_run(config: &RunConfig, points_per_edge: usize, tolerance: f64) -> Result<VerifyReport, CliError> {
    let layout = Layout::new(&config.output);
    let settings = config.sweep_settings();
    let map = config.input_map();
    let n_env = config.environment.generate.as_ref().map_or(1, |g| g.seeds.len());
    let mut audits = Vec::new();
    for i in 0..n_env {
        let pairs: Vec<Pair> = read_json(&layout.pairs(i))?;
        let env_path = layout.environment(i);
        let env = ccgp::geometry::Environment::from_json(&read_text(&env_path)?)
            .map_err(|e| CliError::Io(format!("{}: {e}", env_path.display())))?;
        let scenario = Scenario { index: i, env: &env, model: None, connect: settings.connect, pairs: &pairs };
        let keys: Vec<_> = sweep_keys(&scenario, &settings).into_iter().filter(|k| k.planner.is_chance()).collect();
        if keys.is_empty() {
            continue;
        }
        let model = GpDistanceModel::from_json(&read_text(&layout.model(i))?).map_err(|e| CliError::Io(e.to_string()))?;
        for key in keys {
            let stem = key.stem();
            let outcome: PlanOutcome = read_json(&layout.plan(&stem))?;
            if let (Ok(plan), Some(delta)) = (&outcome.plan, key.delta) {
                audits.push(audit_plan(&stem, plan, &model, delta, &map, points_per_edge, tolerance)?);
            }
        }
    }
    let report = VerifyReport::new(points_per_edge, tolerance, audits);
    write_json(&layout.verify(), &report)?;
    Ok(report)
}

/// Audits a single plan file. `delta` defaults to the one stored with the
/// plan.
pub fn verify_files(
    plan_path: &Path,
    model_path: &Path,
    delta: Option<f64>,
    map: &InputMap,
    points_per_edge: usize,
    tolerance: f64,
) -> Result<VerifyReport, CliError> {
    let text = read_text(plan_path)?;
    let (plan, stored) = match serde_json::from_str::<PlanOutcome>(&text) {
        Ok(o) => (o.plan.map_err(|e| CliError::Config(format!("{} holds a failed plan: {e}", plan_path.display())))?, o.key.delta),
        Err(_) => (Plan::from_json(&text).map_err(|e| CliError::Io(format!("{}: {e}", plan_path.display())))?, None),
    };
    let delta = delta.or(stored).ok_or_else(|| CliError::Config("no δ given and none stored with the plan".into()))?;
    let model = GpDistanceModel::from_json(&read_text(model_path)?).map_err(|e| CliError::Io(format!("{}: {e}", model_path.display())))?;
    let name = plan_path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let audit = audit_plan(&name, &plan, &model, delta, map, points_per_edge, tolerance)?;
    Ok(VerifyReport::new(points_per_edge, tolerance, vec![audit]))
}
