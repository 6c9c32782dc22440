//! Gaussian-process regression of distance-to-collision.
//!
//! The model is fitted once; `(K + σ²I)` is factored at fit time and every
//! query reuses the factor (through the cached weights `α = (K + σ²I)⁻¹d` and
//! the inverse used for variance quadratic forms).

mod lipschitz;

pub use lipschitz::{
    check_appendix_bounds, lipschitz_k, lipschitz_q, taylor_series_sums, AppendixCheck,
    AppendixReport, LipschitzBound,
};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Kernel values below this are treated as exact zeros in queries.
const KERNEL_CUTOFF: f64 = 1e-16;
const JITTERS: [f64; 3] = [0.0, 1e-10, 1e-8];
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum GpError {
    #[error("training data mismatch: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("noise variance must be positive, got {0}")]
    NoiseVariance(f64),
    #[error("invalid kernel: {0}")]
    Kernel(String),
    #[error("Gram matrix is not positive definite even with jitter {0:e}")]
    Factorization(f64),
    #[error("eigenvalue iteration did not converge after {0} iterations")]
    EigenSolve(usize),
    #[error("model file: {0}")]
    Persistence(String),
}

/// Stationary covariance with unit signal variance, so `K(x, x) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kernel {
    Rbf { length_scale: f64 },
}

impl Kernel {
    pub fn rbf(length_scale: f64) -> Result<Self, GpError> {
        if !(length_scale > 0.0) || !length_scale.is_finite() {
            return Err(GpError::Kernel(format!(
                "length scale must be positive, got {length_scale}"
            )));
        }
        Ok(Kernel::Rbf { length_scale })
    }

    pub fn length_scale(&self) -> f64 {
        match self {
            Kernel::Rbf { length_scale } => *length_scale,
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let r2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        self.from_sq_dist(r2)
    }

    #[inline]
    fn from_sq_dist(&self, r2: f64) -> f64 {
        let l = self.length_scale();
        (-0.5 * r2 / (l * l)).exp()
    }

    /// Squared distance beyond which the kernel is below [`KERNEL_CUTOFF`].
    fn cutoff_sq_dist(&self) -> f64 {
        let l = self.length_scale();
        -2.0 * l * l * KERNEL_CUTOFF.ln()
    }
}

/// Fitted GP over planning-space inputs with observed distances.
#[derive(Debug, Clone)]
pub struct GpDistanceModel {
    dim: usize,
    inputs: Vec<f64>,
    targets: DVector<f64>,
    kernel: Kernel,
    noise_variance: f64,
    jitter: f64,
    factor: Cholesky<f64, Dyn>,
    weights: DVector<f64>,
    inverse: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    kernel: Kernel,
    noise_variance: f64,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

/// Builds the Gram matrix `K(X, X)` for row-major inputs.
pub fn gram_matrix(kernel: &Kernel, inputs: &[Vec<f64>]) -> DMatrix<f64> {
    let n = inputs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in 0..i {
            let v = kernel.eval(&inputs[i], &inputs[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

fn validate(inputs: &[Vec<f64>], targets: &[f64], noise_variance: f64) -> Result<usize, GpError> {
    if inputs.is_empty() {
        return Err(GpError::Shape("at least one training pair is required".into()));
    }
    if inputs.len() != targets.len() {
        return Err(GpError::Shape(format!(
            "{} inputs but {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    let dim = inputs[0].len();
    if dim == 0 || inputs.iter().any(|x| x.len() != dim) {
        return Err(GpError::Shape("inputs must share one positive dimension".into()));
    }
    if inputs.iter().flatten().any(|v| !v.is_finite()) {
        return Err(GpError::NonFinite("training inputs"));
    }
    if targets.iter().any(|v| !v.is_finite()) {
        return Err(GpError::NonFinite("training targets"));
    }
    if !(noise_variance > 0.0) || !noise_variance.is_finite() {
        return Err(GpError::NoiseVariance(noise_variance));
    }
    Ok(dim)
}

fn factor_with_jitter(
    gram: &DMatrix<f64>,
    noise_variance: f64,
) -> Result<(Cholesky<f64, Dyn>, f64), GpError> {
    for jitter in JITTERS {
        let mut a = gram.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += noise_variance + jitter;
        }
        if let Some(chol) = Cholesky::new(a) {
            if jitter > 0.0 {
                log::warn!("Gram factorization needed jitter {jitter:e}");
            }
            return Ok((chol, jitter));
        }
    }
    Err(GpError::Factorization(*JITTERS.last().unwrap()))
}

/// Log marginal likelihood of `targets` under the kernel and noise level.
pub fn log_marginal_likelihood(
    inputs: &[Vec<f64>],
    targets: &[f64],
    kernel: &Kernel,
    noise_variance: f64,
) -> Result<f64, GpError> {
    validate(inputs, targets, noise_variance)?;
    let gram = gram_matrix(kernel, inputs);
    let (chol, _) = factor_with_jitter(&gram, noise_variance)?;
    let d = DVector::from_column_slice(targets);
    let alpha = chol.solve(&d);
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
    let n = targets.len() as f64;
    Ok(-0.5 * d.dot(&alpha) - log_det - 0.5 * n * (2.0 * std::f64::consts::PI).ln())
}

/// Multipliers applied to `workspace_diagonal / 10` when searching for ℓ.
pub const LENGTH_SCALE_GRID: [f64; 5] = [0.1, 0.2, 0.5, 1.0, 2.0];

/// Picks the RBF length scale on the fixed grid that maximizes the log
/// marginal likelihood. Ties keep the smaller length scale.
pub fn select_length_scale(
    inputs: &[Vec<f64>],
    targets: &[f64],
    noise_variance: f64,
    workspace_diagonal: f64,
) -> Result<(f64, Vec<(f64, f64)>), GpError> {
    let grid: Vec<f64> = LENGTH_SCALE_GRID.iter().map(|m| m * workspace_diagonal / 10.0).collect();
    select_length_scale_from(inputs, targets, noise_variance, &grid)
}

/// Same as [`select_length_scale`] over explicit candidate length scales,
/// returning the winner and every `(ℓ, log marginal likelihood)`.
pub fn select_length_scale_from(
    inputs: &[Vec<f64>],
    targets: &[f64],
    noise_variance: f64,
    candidates: &[f64],
) -> Result<(f64, Vec<(f64, f64)>), GpError> {
    if candidates.is_empty() {
        return Err(GpError::Kernel("empty length-scale grid".into()));
    }
    let mut scores = Vec::with_capacity(candidates.len());
    for &l in candidates {
        let lml = log_marginal_likelihood(inputs, targets, &Kernel::rbf(l)?, noise_variance)?;
        scores.push((l, lml));
    }
    let mut sorted = scores.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let best = sorted
        .iter()
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, &(l, s)| if s > acc.1 { (l, s) } else { acc })
        .0;
    Ok((best, scores))
}

impl GpDistanceModel {
    /// Fits the model. Identical input always yields a bit-identical model.
    pub fn fit(
        inputs: &[Vec<f64>],
        targets: &[f64],
        kernel: Kernel,
        noise_variance: f64,
    ) -> Result<Self, GpError> {
        let dim = validate(inputs, targets, noise_variance)?;
        Kernel::rbf(kernel.length_scale())?;
        let gram = gram_matrix(&kernel, inputs);
        let (factor, jitter) = factor_with_jitter(&gram, noise_variance)?;
        let d = DVector::from_column_slice(targets);
        let weights = factor.solve(&d);
        let inverse = factor.inverse();
        Ok(GpDistanceModel {
            dim,
            inputs: inputs.iter().flatten().copied().collect(),
            targets: d,
            kernel,
            noise_variance,
            jitter,
            factor,
            weights,
            inverse,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// Diagonal jitter that was needed on top of σ² (0 in the common case).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn inputs(&self) -> Vec<Vec<f64>> {
        self.inputs.chunks(self.dim).map(|c| c.to_vec()).collect()
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    /// Lower-triangular factor `L` with `L Lᵀ = K + σ²I (+ jitter)`.
    pub fn factor(&self) -> &Cholesky<f64, Dyn> {
        &self.factor
    }

    /// `(K + σ²I)⁻¹ d`.
    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// `(K + σ²I)⁻¹`, derived from the factor at fit time.
    pub fn precision(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    /// The dense kernel vector `k(x*)`.
    pub fn kernel_vector(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.len(), (0..self.len()).map(|i| self.kernel.eval(self.input(i), x)))
    }

    /// Posterior mean (m) and latent variance (m²) of the distance at `x`.
    pub fn posterior(&self, x: &[f64]) -> (f64, f64) {
        debug_assert_eq!(x.len(), self.dim);
        let cutoff = self.kernel.cutoff_sq_dist();
        let mut idx = Vec::new();
        let mut kv = Vec::new();
        for i in 0..self.len() {
            let xi = self.input(i);
            let mut r2 = 0.0;
            for (a, b) in xi.iter().zip(x) {
                r2 += (a - b) * (a - b);
            }
            if r2 < cutoff {
                let k = self.kernel.from_sq_dist(r2);
                debug_assert!((0.0..=1.0).contains(&k));
                idx.push(i);
                kv.push(k);
            }
        }
        let mut mean = 0.0;
        let mut quad = 0.0;
        for (a, (&i, &ki)) in idx.iter().zip(&kv).enumerate() {
            mean += ki * self.weights[i];
            let col = self.inverse.column(i);
            // symmetric: diagonal once, off-diagonal twice
            let mut row = 0.0;
            for (&j, &kj) in idx[..a].iter().zip(&kv[..a]) {
                row += col[j] * kj;
            }
            quad += ki * (2.0 * row + col[i] * ki);
        }
        let var = (1.0 - quad).clamp(0.0, 1.0);
        (mean, var)
    }

    /// `𝔼[d*] / √(2 𝕍[d*])`; the deterministic surrogate for the chance
    /// constraint.
    pub fn g(&self, x: &[f64]) -> f64 {
        let (mean, var) = self.posterior(x);
        mean / (2.0 * var.max(f64::MIN_POSITIVE)).sqrt()
    }

    /// [`posterior`](Self::posterior) at many points, with one
    /// matrix-matrix product against the precision matrix.
    pub fn posterior_batch(&self, xs: &[Vec<f64>]) -> Vec<(f64, f64)> {
        if xs.is_empty() {
            return Vec::new();
        }
        let kmat = DMatrix::from_fn(self.len(), xs.len(), |i, j| self.kernel.eval(self.input(i), &xs[j]));
        let w = &self.inverse * &kmat;
        (0..xs.len())
            .map(|j| {
                let k = kmat.column(j);
                let quad = k.dot(&w.column(j));
                (k.dot(&self.weights), (1.0 - quad).clamp(0.0, 1.0))
            })
            .collect()
    }

    pub fn g_batch(&self, xs: &[Vec<f64>]) -> Vec<f64> {
        self.posterior_batch(xs)
            .into_iter()
            .map(|(mean, var)| mean / (2.0 * var.max(f64::MIN_POSITIVE)).sqrt())
            .collect()
    }

    /// `q(k) = kᵀMd / √(2(1 − kᵀMk))` with `M = (K + σ²I)⁻¹`, evaluated for
    /// an arbitrary vector `k`. Returns NaN when `kᵀMk ≥ 1`.
    pub fn q(&self, k: &DVector<f64>) -> f64 {
        let num = k.dot(&self.weights);
        let quad = k.dot(&(&self.inverse * k));
        if quad >= 1.0 {
            return f64::NAN;
        }
        num / (2.0 * (1.0 - quad)).sqrt()
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: MODEL_FORMAT_VERSION,
            kernel: self.kernel,
            noise_variance: self.noise_variance,
            inputs: self.inputs(),
            targets: self.targets.iter().copied().collect(),
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    /// Loads a model written by [`to_json`](Self::to_json); the factor is
    /// recomputed.
    pub fn from_json(text: &str) -> Result<Self, GpError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| GpError::Persistence(e.to_string()))?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(GpError::Persistence(format!(
                "unsupported model version {}",
                file.version
            )));
        }
        Self::fit(&file.inputs, &file.targets, file.kernel, file.noise_variance)
    }
}
