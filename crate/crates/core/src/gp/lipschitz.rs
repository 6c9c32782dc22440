//! Lipschitz constants for the constraint ratio `g = q ∘ k` and the matrix
//! inequalities they rest on.
//!
//! For `M = (σ²I + K)⁻¹` with largest eigenvalue `λ` and `n` training points,
//! `q(k) = kᵀMd / √(2(1 − kᵀMk))` is Lipschitz on `[0,1]ⁿ` with constant
//! `‖Md‖/√2 · (1 − λn)^{-3/2}` whenever `λn < 1`. The RBF kernel vector is
//! Lipschitz with `√n · e^{-1/2} / ℓ`, and the product bounds `g`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{GpDistanceModel, GpError, Kernel};

const RITZ_TOLERANCE: f64 = 1e-12;
const LANCZOS_MAX_STEPS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzBound {
    /// Constant of `q` over `[0,1]ⁿ`; infinite when the bound is vacuous
    /// (stored as `null`).
    #[serde(with = "infinite_as_null")]
    pub l_q: f64,
    /// Constant of the kernel vector map `x ↦ k(x)`.
    pub l_k: f64,
    /// Largest eigenvalue of `(σ²I + K)⁻¹`. When the bound is vacuous this
    /// may be a lower estimate that already exceeds `1/n`.
    pub lambda_max: f64,
    pub n: usize,
    /// `λ_max · n < 1`.
    pub valid: bool,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl LipschitzBound {
    /// Bound on `|g(x₁) − g(x₂)| / ‖x₁ − x₂‖`.
    pub fn composed(&self) -> f64 {
        self.l_q * self.l_k
    }
}

/// Largest eigenvalue of `(K + σ²I)⁻¹` by Lanczos iteration with full
/// reorthogonalization against the stored precision matrix.
///
/// Stops once the Ritz residual `β|s_k|` falls below `1e-12 · λ`, or when the
/// Krylov space is exhausted. Returns `(λ, exact)`; the Ritz value is a lower
/// bound, so when `vacuous_above` is given and exceeded the iteration stops
/// early with `exact = false`.
pub fn largest_precision_eigenvalue(
    model: &GpDistanceModel,
    vacuous_above: Option<f64>,
) -> Result<(f64, bool), GpError> {
    let m = model.precision();
    let n = m.nrows();
    let max_steps = n.min(LANCZOS_MAX_STEPS);
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(max_steps);
    let mut alpha = Vec::with_capacity(max_steps);
    let mut beta: Vec<f64> = Vec::with_capacity(max_steps);
    // deterministic start vector with no symmetry to get stuck on
    let mut q = DVector::from_fn(n, |i, _| 1.0 + ((i as f64 + 1.0) * 0.754_877_666).fract());
    q /= q.norm();
    for k in 0..max_steps {
        let mut w = m * &q;
        let a = q.dot(&w);
        basis.push(q.clone());
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let b_next = w.norm();
        if !b_next.is_finite() {
            return Err(GpError::EigenSolve(k));
        }
        let t = DMatrix::from_fn(k + 1, k + 1, |i, j| {
            if i == j {
                alpha[i]
            } else if i.abs_diff(j) == 1 {
                beta[i.min(j)]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (top, theta) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        let residual = b_next * eig.eigenvectors[(k, top)].abs();
        if residual <= RITZ_TOLERANCE * theta || b_next <= RITZ_TOLERANCE * theta || k + 1 == n {
            return Ok((theta, true));
        }
        if vacuous_above.is_some_and(|limit| theta >= limit) {
            return Ok((theta, false));
        }
        beta.push(b_next);
        q = w / b_next;
    }
    Err(GpError::EigenSolve(max_steps))
}

/// RBF kernel-vector Lipschitz constant for `n` training points:
/// each component has gradient norm at most `e^{-1/2}/ℓ`.
pub fn lipschitz_k(kernel: &Kernel, n: usize) -> f64 {
    match kernel {
        Kernel::Rbf { length_scale } => (n as f64).sqrt() * (-0.5f64).exp() / length_scale,
    }
}

pub fn lipschitz_q(model: &GpDistanceModel) -> Result<LipschitzBound, GpError> {
    let n = model.len();
    let (lambda_max, _) = largest_precision_eigenvalue(model, Some(1.0 / n as f64))?;
    let slack = 1.0 - lambda_max * n as f64;
    let valid = slack > 0.0;
    let l_q = if valid {
        model.weights().norm() / std::f64::consts::SQRT_2 * slack.powf(-1.5)
    } else {
        f64::INFINITY
    };
    Ok(LipschitzBound {
        l_q,
        l_k: lipschitz_k(model.kernel(), n),
        lambda_max,
        n,
        valid,
    })
}

/// Partial sums through `terms` of
/// `1 + Σ aᵐ/m! Π_{j<m}(½ + j)` and `Σ m aᵐ/m! Π_{j<m}(½ + j)`,
/// whose limits are `(1 − a)^{-1/2}` and `a / (2(1 − a)^{3/2})`.
pub fn taylor_series_sums(a: f64, terms: usize) -> (f64, f64) {
    let mut term = 1.0;
    let mut s1 = 1.0;
    let mut s2 = 0.0;
    for m in 1..=terms {
        let mf = m as f64;
        term *= a * (mf - 0.5) / mf;
        s1 += term;
        s2 += mf * term;
    }
    (s1, s2)
}

/// One evaluated inequality: `lhs ≤ rhs` is expected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AppendixCheck {
    /// 2: quadratic-form difference, 3: powered difference, 4: scaled vectors.
    pub lemma: u8,
    pub power: u32,
    pub lhs: f64,
    pub rhs: f64,
}

impl AppendixCheck {
    pub fn violated(&self) -> bool {
        self.lhs > self.rhs * (1.0 + 1e-12) + 1e-14
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct AppendixReport {
    pub lambda_max: f64,
    pub checks: usize,
    pub violations: Vec<AppendixCheck>,
    /// Samples rejected because they were outside `[0,1]ⁿ`.
    pub skipped: usize,
}

/// Evaluates both sides of the quadratic-form inequalities for each sample
/// pair `(x₁, x₂)` and powers `m ∈ {1, 2, 3}`:
///
/// * `|x₁ᵀMx₁ − x₂ᵀMx₂| ≤ 2λ√n‖x₁ − x₂‖`
/// * `|(x₁ᵀMx₁)ᵐ − (x₂ᵀMx₂)ᵐ| ≤ (2/√n) m (λn)ᵐ ‖x₁ − x₂‖`
/// * `‖(x₁ᵀMx₁)ᵐx₁ − (x₂ᵀMx₂)ᵐx₂‖ ≤ (1 + 2m)(λn)ᵐ ‖x₁ − x₂‖`
pub fn check_appendix_bounds(
    m: &DMatrix<f64>,
    samples: &[(DVector<f64>, DVector<f64>)],
) -> AppendixReport {
    let n = m.nrows();
    let lambda = SymmetricEigen::new(m.clone()).eigenvalues.max();
    let nf = n as f64;
    let mut report = AppendixReport {
        lambda_max: lambda,
        ..Default::default()
    };
    let in_unit_cube = |x: &DVector<f64>| x.len() == n && x.iter().all(|v| (0.0..=1.0).contains(v));
    for (x1, x2) in samples {
        if !in_unit_cube(x1) || !in_unit_cube(x2) {
            report.skipped += 1;
            continue;
        }
        let a = x1.dot(&(m * x1));
        let b = x2.dot(&(m * x2));
        let dx = (x1 - x2).norm();
        let mut push = |c: AppendixCheck| {
            report.checks += 1;
            if c.violated() {
                report.violations.push(c);
            }
        };
        push(AppendixCheck {
            lemma: 2,
            power: 1,
            lhs: (a - b).abs(),
            rhs: 2.0 * lambda * nf.sqrt() * dx,
        });
        for p in 1..=3u32 {
            let pf = p as f64;
            let scale = (lambda * nf).powi(p as i32);
            push(AppendixCheck {
                lemma: 3,
                power: p,
                lhs: (a.powi(p as i32) - b.powi(p as i32)).abs(),
                rhs: 2.0 / nf.sqrt() * pf * scale * dx,
            });
            push(AppendixCheck {
                lemma: 4,
                power: p,
                lhs: (x1 * a.powi(p as i32) - x2 * b.powi(p as i32)).norm(),
                rhs: (1.0 + 2.0 * pf) * scale * dx,
            });
        }
    }
    report
}
