//! Simplicial homology global optimization over 1-D and 2-D boxes.
//!
//! The objective is sampled, the samples are triangulated, and each edge is
//! oriented toward its higher endpoint. Vertices whose edges all point away
//! form the minimizer set; a bounded local search inside each vertex's star
//! then locates the stationary point that the star is guaranteed to contain.

mod complex;
mod local;
mod sampling;
pub mod suite;

pub use complex::{build_complex, extract_minimizers, MinimizerSet, SimplicialComplex};
pub use sampling::{delaunay_2d, sobol_2d, unit_samples};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ShgoError {
    #[error("objective returned {value} at {point:?}")]
    NonFinite { point: Vec<f64>, value: f64 },
    #[error("invalid domain: {0}")]
    Domain(String),
    #[error("{dim}-D domain needs at least {required} samples, got {got}")]
    TooFewSamples { dim: usize, required: usize, got: usize },
    #[error("{0}-dimensional domains are not supported (1 or 2 only)")]
    Dimension(usize),
    #[error("minimizer set is empty")]
    NoMinimizers,
}

/// Axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, ShgoError> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(ShgoError::Domain("bounds must have equal, positive length".into()));
        }
        if lower.iter().zip(&upper).any(|(a, b)| !a.is_finite() || !b.is_finite() || a > b) {
            return Err(ShgoError::Domain(format!("need finite lower ≤ upper, got {lower:?} {upper:?}")));
        }
        Ok(BoxDomain { lower, upper })
    }

    pub fn interval(a: f64, b: f64) -> Result<Self, ShgoError> {
        Self::new(vec![a], vec![b])
    }

    pub fn unit_interval() -> Self {
        BoxDomain { lower: vec![0.0], upper: vec![1.0] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(k, t)| self.lower[k] + t * (self.upper[k] - self.lower[k]))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(k, v)| *v >= self.lower[k] && *v <= self.upper[k])
    }
}

/// Counts calls and rejects non-finite values.
pub(crate) struct Evaluator<F> {
    f: F,
    count: usize,
}

impl<F: FnMut(&[f64]) -> f64> Evaluator<F> {
    pub(crate) fn new(f: F) -> Self {
        Evaluator { f, count: 0 }
    }

    /// Accounts for values computed outside the closure.
    pub(crate) fn record(&mut self, xs: &[Vec<f64>], values: Vec<f64>) -> Result<Vec<f64>, ShgoError> {
        self.count += xs.len();
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ShgoError::NonFinite { point: xs[i].clone(), value: values[i] });
        }
        Ok(values)
    }

    pub(crate) fn call(&mut self, x: &[f64]) -> Result<f64, ShgoError> {
        self.count += 1;
        let v = (self.f)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ShgoError::NonFinite { point: x.to_vec(), value: v })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShgoOptions {
    pub n_samples: usize,
    pub local_tol: f64,
    /// Evaluation budget per star.
    pub local_budget: usize,
    /// Lipschitz constant of the objective, used only to report an error bound.
    pub lipschitz_hint: Option<f64>,
}

impl Default for ShgoOptions {
    fn default() -> Self {
        ShgoOptions { n_samples: 64, local_tol: 1e-8, local_budget: 200, lipschitz_hint: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShgoResult {
    pub x: Vec<f64>,
    pub fun: f64,
    pub evaluations: usize,
    pub n_minimizers: usize,
    /// False when any local search ran out of budget.
    pub converged: bool,
    /// `L·h` with `h` the longest complex edge, when a hint was given.
    pub error_bound: Option<f64>,
}

/// Local search in every star, keeping the best point seen including the
/// sampled vertices.
pub fn refine<F: FnMut(&[f64]) -> f64>(
    f: F,
    complex: &SimplicialComplex,
    minimizers: &MinimizerSet,
    options: &ShgoOptions,
) -> Result<ShgoResult, ShgoError> {
    let mut eval = Evaluator::new(f);
    refine_with(&mut eval, complex, minimizers, options)
}

fn refine_with<F: FnMut(&[f64]) -> f64>(
    eval: &mut Evaluator<F>,
    complex: &SimplicialComplex,
    minimizers: &MinimizerSet,
    options: &ShgoOptions,
) -> Result<ShgoResult, ShgoError> {
    if minimizers.is_empty() {
        return Err(ShgoError::NoMinimizers);
    }
    let b = complex.best_vertex();
    let mut best = (complex.vertices[b].clone(), complex.values[b]);
    let mut converged = true;
    for (&v, star) in minimizers.vertices.iter().zip(&minimizers.stars) {
        let start = (complex.vertices[v].as_slice(), complex.values[v]);
        let local = if complex.dim == 1 {
            local::golden_section(
                eval,
                (star.lower[0], star.upper[0]),
                (start.0[0], start.1),
                options.local_tol,
                options.local_budget,
            )?
        } else {
            local::nelder_mead(eval, star, start, options.local_tol, options.local_budget)?
        };
        converged &= local.converged;
        if local.fun < best.1 {
            best = (local.x, local.fun);
        }
    }
    Ok(ShgoResult {
        x: best.0,
        fun: best.1,
        evaluations: eval.count,
        n_minimizers: minimizers.len(),
        converged,
        error_bound: None,
    })
}

/// Build, extract and refine.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    f: F,
    domain: &BoxDomain,
    options: &ShgoOptions,
) -> Result<ShgoResult, ShgoError> {
    let mut eval = Evaluator::new(f);
    let complex = complex::build_with(&mut eval, domain, options.n_samples)?;
    finish(&mut eval, &complex, options)
}

/// As [`minimize`], but the initial samples are evaluated in one call to
/// `batch`, which must return `f` at every point in order.
pub fn minimize_batched<F, B>(f: F, mut batch: B, domain: &BoxDomain, options: &ShgoOptions) -> Result<ShgoResult, ShgoError>
where
    F: FnMut(&[f64]) -> f64,
    B: FnMut(&[Vec<f64>]) -> Vec<f64>,
{
    let mut eval = Evaluator::new(f);
    let complex = complex::build_from(domain, options.n_samples, |xs| {
        let values = batch(xs);
        eval.record(xs, values)
    })?;
    finish(&mut eval, &complex, options)
}

fn finish<F: FnMut(&[f64]) -> f64>(
    eval: &mut Evaluator<F>,
    complex: &SimplicialComplex,
    options: &ShgoOptions,
) -> Result<ShgoResult, ShgoError> {
    let minimizers = extract_minimizers(complex);
    let mut result = refine_with(eval, complex, &minimizers, options)?;
    result.error_bound = options.lipschitz_hint.map(|l| l * complex.max_edge_length());
    Ok(result)
}
