use std::time::Instant;

use ccgp::chance::{point_satisfies, threshold_from_delta, ChanceConstraint};
use ccgp::geometry::{Environment, Pose2};
use ccgp::gp::GpDistanceModel;
use ccgp::harness::{
    collect_training_data, derive_seed, evaluate_outcomes, fit_model, min_distance_histogram, plan_scenario, random_segments,
    run_density_study, sample_pairs, summarize, sweep_keys, time_edge_evaluations, EnvironmentDescriptor, ExperimentReport,
    FitReport, Pair, PairRecord, PlanOutcome, Quartiles, Scenario, TrainingSet, TrialBatch,
};
use ccgp::robots::Outcome;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::layout::{read_json, read_text, write_csv, write_json, write_manifest, write_text, Layout};
use crate::CliError;

fn env_count(config: &RunConfig) -> usize {
    match &config.environment.generate {
        Some(g) => g.seeds.len(),
        None => 1,
    }
}

fn load_environment(layout: &Layout, env: usize) -> Result<Environment, CliError> {
    let path = layout.environment(env);
    Environment::from_json(&read_text(&path)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load_model(layout: &Layout, env: usize) -> Result<GpDistanceModel, CliError> {
    let path = layout.model(env);
    GpDistanceModel::from_json(&read_text(&path)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Generates or imports the environments and collects one training set per
/// environment.
pub fn collect(config: &RunConfig) -> Result<Vec<TrainingSet>, CliError> {
    let t0 = Instant::now();
    let layout = Layout::new(&config.output);
    write_text(&layout.config(), &config.to_toml())?;
    let robot = config.robot()?;
    let system = config.system();
    let gp = config.gp_settings();
    let mut sets = Vec::new();
    let mut details = Vec::new();
    for (i, env) in config.environments()?.iter().enumerate() {
        write_text(&layout.environment(i), &env.to_json())?;
        let seed = derive_seed(config.seed, &[1, i as u64]);
        let t = Instant::now();
        let set = collect_training_data(env, &robot, &system, &gp.collect, seed)?;
        write_json(&layout.training(i), &set)?;
        details.push(json!({ "env": i, "env_seed": env.seed, "collection_seed": seed, "samples": set.len(), "seconds": t.elapsed().as_secs_f64() }));
        sets.push(set);
    }
    write_manifest(&layout, "collect", config.seed, t0.elapsed().as_secs_f64(), details)?;
    Ok(sets)
}

/// Fits one model per training set and writes the chosen length scale and
/// Lipschitz report next to it.
pub fn fit(config: &RunConfig) -> Result<Vec<FitReport>, CliError> {
    let t0 = Instant::now();
    let layout = Layout::new(&config.output);
    let gp = config.gp_settings();
    let mut reports = Vec::new();
    let mut details = Vec::new();
    for i in 0..env_count(config) {
        let env = load_environment(&layout, i)?;
        let set: TrainingSet = read_json(&layout.training(i))?;
        let t = Instant::now();
        let (model, report) = fit_model(&set, &env.bounds, &gp)?;
        write_text(&layout.model(i), &model.to_json())?;
        write_json(&layout.fit(i), &report)?;
        details.push(json!({ "env": i, "length_scale": report.length_scale, "lipschitz_valid": report.lipschitz.valid, "seconds": t.elapsed().as_secs_f64() }));
        reports.push(report);
    }
    write_manifest(&layout, "fit", config.seed, t0.elapsed().as_secs_f64(), details)?;
    Ok(reports)
}

/// Draws start/goal pairs and plans every `(pair, planner, δ)` job. A failed
/// plan is written with its reason.
pub fn plan(config: &RunConfig) -> Result<Vec<PlanOutcome>, CliError> {
    let t0 = Instant::now();
    let layout = Layout::new(&config.output);
    let robot = config.robot()?;
    let settings = config.sweep_settings();
    let needs_model = settings.planners.iter().any(|p| p.is_chance());
    // pair ends must satisfy the tightest constraint, or no chance planner could start
    let tightest = settings.deltas.iter().copied().fold(0.5, f64::min);
    let mut all = Vec::new();
    let mut details = Vec::new();
    for i in 0..env_count(config) {
        let env = load_environment(&layout, i)?;
        let (model, connect) = if needs_model {
            let fit: FitReport = read_json(&layout.fit(i))?;
            (Some(load_model(&layout, i)?), fit.connect_options(&settings.connect))
        } else {
            (None, settings.connect)
        };
        let cc = ChanceConstraint::new(tightest).map_err(|e| CliError::Config(e.to_string()))?;
        let map = settings.connect.input_map;
        let accept = |q: &Pose2| model.as_ref().is_none_or(|m| point_satisfies(m, q, &cc, &map));
        let pairs = sample_pairs(&env, &robot, config.sweep.pairs_per_env, &config.pair_options(), &accept, derive_seed(config.seed, &[2, i as u64]))?;
        write_json(&layout.pairs(i), &pairs)?;
        let scenario = Scenario { index: i, env: &env, model: model.as_ref(), connect, pairs: &pairs };
        for (mut outcome, seconds) in plan_scenario(&scenario, &robot, &settings, config.seed) {
            if let Ok(p) = &mut outcome.plan {
                p.meta.wall_time = 0.0;
            }
            let stem = outcome.key.stem();
            write_json(&layout.plan(&stem), &outcome)?;
            details.push(json!({ "plan": stem, "planned": outcome.plan.is_ok(), "seconds": seconds }));
            all.push(outcome);
        }
    }
    write_manifest(&layout, "plan", config.seed, t0.elapsed().as_secs_f64(), details)?;
    Ok(all)
}

#[derive(Debug, Serialize)]
struct TrialRow {
    trial: usize,
    outcome: Outcome,
    min_distance: f64,
}

/// One row per `(planner, δ)`: counts and the two quartile sets.
#[derive(Debug, Serialize)]
struct SummaryCsvRow {
    planner: String,
    delta: Option<f64>,
    pairs: usize,
    planned: usize,
    success_min: Option<f64>,
    success_q1: Option<f64>,
    success_median: Option<f64>,
    success_q3: Option<f64>,
    success_max: Option<f64>,
    length_min: Option<f64>,
    length_q1: Option<f64>,
    length_median: Option<f64>,
    length_q3: Option<f64>,
    length_max: Option<f64>,
}

fn quartile_fields(q: Option<Quartiles>) -> [Option<f64>; 5] {
    match q {
        Some(q) => [Some(q.min), Some(q.q1), Some(q.median), Some(q.q3), Some(q.max)],
        None => [None; 5],
    }
}

#[derive(Debug, Serialize)]
struct DensityCsvRow {
    n_obstacles: usize,
    env_seed: u64,
    length_scale: f64,
    planned: usize,
    pairs: usize,
    median_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalSummary {
    pub report: ExperimentReport,
    pub violations: Vec<String>,
}

/// Rolls out every stored plan, writes per-plan trial and histogram CSVs and
/// the aggregated report, then checks the report's invariants. Failed
/// checks are returned in the summary and written to `invariants.json`.
pub fn eval(config: &RunConfig) -> Result<EvalSummary, CliError> {
    let t0 = Instant::now();
    let layout = Layout::new(&config.output);
    let robot = config.robot()?;
    let system = config.system();
    let settings = config.sweep_settings();
    let mut environments = Vec::new();
    let mut records = Vec::new();
    let mut violations = Vec::new();
    let mut edge_timing = Vec::new();
    for i in 0..env_count(config) {
        let env = load_environment(&layout, i)?;
        let pairs: Vec<Pair> = read_json(&layout.pairs(i))?;
        let scenario = Scenario { index: i, env: &env, model: None, connect: settings.connect, pairs: &pairs };
        let outcomes = sweep_keys(&scenario, &settings)
            .iter()
            .map(|k| read_json::<PlanOutcome>(&layout.plan(&k.stem())))
            .collect::<Result<Vec<_>, _>>()?;
        let batches = evaluate_outcomes(&scenario, &outcomes, &robot, &system, settings.trials, config.seed)?;
        for (o, b) in outcomes.iter().zip(&batches) {
            let stem = o.key.stem();
            if let Some(b) = b {
                let rows: Vec<TrialRow> = (0..b.n_trials)
                    .map(|t| TrialRow { trial: t, outcome: b.outcomes[t], min_distance: b.min_distances[t] })
                    .collect();
                write_csv(&layout.trials(&stem), &rows)?;
                let h = min_distance_histogram(b, config.sweep.histogram_bin)?;
                write_text(&layout.histogram(&stem), &h.to_csv())?;
                if h.counts.iter().sum::<usize>() != b.n_trials {
                    violations.push(format!("{stem}: histogram counts do not sum to the trial count"));
                }
                violations.extend(check_batch(&stem, b));
            }
            violations.extend(check_plan(o));
            records.push(PairRecord::new(o, env.seed, b.as_ref()));
        }
        if settings.planners.iter().any(|p| p.is_chance()) && layout.model(i).is_file() {
            let model = load_model(&layout, i)?;
            let fit: FitReport = read_json(&layout.fit(i))?;
            let segments = random_segments(&env.bounds, 50, config.planner.eta, derive_seed(config.seed, &[3, i as u64]));
            for &d in &settings.deltas {
                let (mean, std) = time_edge_evaluations(&model, &segments, d, &fit.connect_options(&settings.connect))?;
                edge_timing.push(json!({ "env": i, "delta": d, "edge_seconds_mean": mean, "edge_seconds_std": std }));
            }
        }
        environments.push(EnvironmentDescriptor::of(i, &env));
    }
    let report = ExperimentReport::new(environments, records);
    violations.extend(check_report(&report));
    write_text(&layout.records(), &report.records_csv()?)?;
    let rows: Vec<SummaryCsvRow> = report
        .summaries
        .iter()
        .map(|s| {
            let [success_min, success_q1, success_median, success_q3, success_max] = quartile_fields(s.success_rate);
            let [length_min, length_q1, length_median, length_q3, length_max] = quartile_fields(s.path_length);
            SummaryCsvRow {
                planner: s.planner.name().to_string(),
                delta: s.delta,
                pairs: s.pairs,
                planned: s.planned,
                success_min,
                success_q1,
                success_median,
                success_q3,
                success_max,
                length_min,
                length_q1,
                length_median,
                length_q3,
                length_max,
            }
        })
        .collect();
    write_csv(&layout.summary(), &rows)?;
    write_json(&layout.report(), &report)?;

    let mut density_timing = Vec::new();
    if config.density.enabled {
        let density = config.density_settings()?;
        let gp = config.gp_settings();
        let rows = run_density_study(&density, &gp, &settings, &robot, &system, config.seed)?;
        let csv_rows: Vec<DensityCsvRow> = rows
            .iter()
            .map(|r| DensityCsvRow {
                n_obstacles: r.n_obstacles,
                env_seed: r.env_seed,
                length_scale: r.length_scale,
                planned: r.planned,
                pairs: r.pairs,
                median_accuracy: r.median_accuracy,
            })
            .collect();
        write_csv(&layout.density(), &csv_rows)?;
        density_timing = rows;
    }

    write_json(&layout.invariants(), &violations)?;
    let timing = json!({ "edge_evaluation": edge_timing, "density": density_timing });
    write_manifest(&layout, "eval", config.seed, t0.elapsed().as_secs_f64(), timing)?;
    Ok(EvalSummary { report, violations })
}

fn check_batch(stem: &str, b: &TrialBatch) -> Vec<String> {
    let mut v = Vec::new();
    let counts = [Outcome::Success, Outcome::Collision, Outcome::Timeout].map(|o| b.count(o));
    if counts.iter().sum::<usize>() != b.n_trials || b.outcomes.len() != b.n_trials {
        v.push(format!("{stem}: outcome counts {counts:?} do not sum to {}", b.n_trials));
    }
    for (t, (o, d)) in b.outcomes.iter().zip(&b.min_distances).enumerate() {
        match o {
            Outcome::Success if *d <= 0.0 => v.push(format!("{stem}: trial {t} succeeded with min distance {d}")),
            Outcome::Collision if *d > 0.0 => v.push(format!("{stem}: trial {t} collided with min distance {d}")),
            _ => {}
        }
    }
    v
}

/// Chance plans must carry `ĉ ≥ c` on every edge.
fn check_plan(o: &PlanOutcome) -> Vec<String> {
    let (Ok(plan), Some(delta)) = (&o.plan, o.key.delta) else {
        return Vec::new();
    };
    let Ok(c) = threshold_from_delta(delta) else {
        return vec![format!("{}: invalid δ {delta}", o.key.stem())];
    };
    plan.edge_c_hat
        .iter()
        .enumerate()
        .filter(|(_, h)| !h.is_some_and(|h| h >= c))
        .map(|(e, h)| format!("{}: edge {e} has ĉ {h:?} below c = {c}", o.key.stem()))
        .collect()
}

fn check_report(report: &ExperimentReport) -> Vec<String> {
    let mut v = Vec::new();
    for r in &report.records {
        if r.successes + r.collisions + r.timeouts != r.trials {
            v.push(format!("record e{} p{} {}: outcome counts do not sum", r.env, r.pair, r.planner));
        }
        if r.success_rate.is_some_and(|s| !(0.0..=1.0).contains(&s)) {
            v.push(format!("record e{} p{} {}: success rate out of range", r.env, r.pair, r.planner));
        }
    }
    let recomputed = summarize(&report.records);
    if recomputed != report.summaries {
        v.push("summaries differ from quartiles recomputed from the records".into());
    }
    for s in &report.summaries {
        for q in [s.success_rate, s.path_length].into_iter().flatten() {
            if !(q.min <= q.q1 && q.q1 <= q.median && q.median <= q.q3 && q.q3 <= q.max) {
                v.push(format!("{} {:?}: quartiles out of order", s.planner, s.delta));
            }
        }
        if let Some(q) = s.success_rate {
            if q.min < 0.0 || q.max > 1.0 {
                v.push(format!("{} {:?}: success quartiles outside [0, 1]", s.planner, s.delta));
            }
        }
    }
    v
}

const OPTIONAL_KEYS: &str = "\
# Keys that are absent by default:
#   [planner] time_limit = <seconds>   wall-clock budget; runs then depend on machine speed
#   [planner] gamma = <constant>       RRT* radius constant; derived from the workspace when absent
#   [gp] length_scale = <meters>       fixed length scale instead of the grid search
#   [gp] heading_weight = <h>          GP input (x, y, h·cos θ, h·sin θ) instead of (x, y)
#   [environment.grid] path = \"map.pgm\", resolution = 0.05, merge = true
#                                      occupancy grid instead of [environment.generate]
";

/// The documented default configuration as TOML.
pub fn dump_defaults() -> String {
    format!("{OPTIONAL_KEYS}\n{}", RunConfig::default().to_toml())
}
