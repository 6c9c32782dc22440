//! SHGO against a dense-grid reference on the built-in function suite.

use ccgp::shgo::suite::{benchmark_suite, dense_grid_minimum, stabilization_function};
use ccgp::shgo::{build_complex, extract_minimizers, minimize, BoxDomain, ShgoOptions};
use serde::{Deserialize, Serialize};

use crate::layout::{write_csv, Layout};
use crate::CliError;

/// Largest accepted `|SHGO − grid|`.
pub const BENCH_TOLERANCE: f64 = 1e-4;

pub const STABILIZATION_SAMPLES: [usize; 4] = [16, 32, 64, 128];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub function: String,
    pub dim: usize,
    pub n_samples: usize,
    pub shgo_min: f64,
    pub grid_min: f64,
    pub gap: f64,
    pub n_minimizers: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilizationRow {
    pub n_samples: usize,
    pub n_minimizers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub stabilization: Vec<StabilizationRow>,
}

impl BenchReport {
    pub fn failures(&self) -> Vec<&BenchRow> {
        self.rows.iter().filter(|r| !(r.gap <= BENCH_TOLERANCE)).collect()
    }

    pub fn stabilized(&self) -> bool {
        self.stabilization.windows(2).all(|w| w[0].n_minimizers == w[1].n_minimizers)
    }
}

pub fn run_suite(name: &str) -> Result<BenchReport, CliError> {
    if name != "default" {
        return Err(CliError::Config(format!("unknown function suite `{name}` (available: default)")));
    }
    let mut rows = Vec::new();
    for tf in benchmark_suite() {
        let options = ShgoOptions { n_samples: tf.n_samples, ..Default::default() };
        let r = minimize(|x| tf.eval(x), &tf.domain(), &options).map_err(|e| CliError::Invariant(format!("{}: {e}", tf.name)))?;
        let per_axis = if tf.lower.len() == 1 { 10_000 } else { 400 };
        let (_, grid_min) = dense_grid_minimum(&|x| tf.eval(x), &tf.domain(), per_axis);
        rows.push(BenchRow {
            function: tf.name.to_string(),
            dim: tf.lower.len(),
            n_samples: tf.n_samples,
            shgo_min: r.fun,
            grid_min,
            gap: (r.fun - grid_min).abs(),
            n_minimizers: r.n_minimizers,
            evaluations: r.evaluations,
            converged: r.converged,
        });
    }
    let stabilization = STABILIZATION_SAMPLES
        .iter()
        .map(|&n| {
            let c = build_complex(|x| stabilization_function(x[0]), &BoxDomain::unit_interval(), n)
                .map_err(|e| CliError::Invariant(e.to_string()))?;
            Ok(StabilizationRow { n_samples: n, n_minimizers: extract_minimizers(&c).len() })
        })
        .collect::<Result<_, CliError>>()?;
    Ok(BenchReport { rows, stabilization })
}

/// Runs the suite and writes both CSVs.
pub fn bench_shgo(name: &str, layout: &Layout) -> Result<BenchReport, CliError> {
    let report = run_suite(name)?;
    write_csv(&layout.shgo_bench(), &report.rows)?;
    write_csv(&layout.shgo_stabilization(), &report.stabilization)?;
    Ok(report)
}
