use nalgebra::{DMatrix, SMatrix, SVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ControlError {
    #[error("innovation covariance is singular")]
    SingularInnovation,
    #[error("non-finite innovation")]
    NonFiniteInnovation,
    #[error("Riccati iteration did not converge in {0} iterations")]
    RiccatiDiverged(usize),
    #[error("matrix dimensions do not agree: {0}")]
    Shape(&'static str),
    #[error("R + BᵀPB is singular")]
    SingularGain,
}

/// Gaussian belief `N(x̂, Σ)` over a `D`-dimensional state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Belief<const D: usize> {
    pub mean: SVector<f64, D>,
    pub cov: SMatrix<f64, D, D>,
}

fn symmetrize<const D: usize>(m: SMatrix<f64, D, D>) -> SMatrix<f64, D, D> {
    (m + m.transpose()) * 0.5
}

/// Measurement update with observation matrix `h`, noise `n`, and innovation
/// `y = z − h(x̂)` supplied by the caller (so angle wrapping stays outside).
pub fn measurement_update<const D: usize, const Z: usize>(
    prior: &Belief<D>,
    innovation: &SVector<f64, Z>,
    h: &SMatrix<f64, Z, D>,
    n: &SMatrix<f64, Z, Z>,
) -> Result<Belief<D>, ControlError> {
    if !innovation.iter().all(|v| v.is_finite()) {
        return Err(ControlError::NonFiniteInnovation);
    }
    if prior.cov.amax() == 0.0 {
        // a certain prior ignores the measurement (the gain limit is zero)
        return Ok(*prior);
    }
    let s = h * prior.cov * h.transpose() + n;
    let s_inv = s.try_inverse().ok_or(ControlError::SingularInnovation)?;
    if !s_inv.iter().all(|v| v.is_finite()) {
        return Err(ControlError::SingularInnovation);
    }
    let k = prior.cov * h.transpose() * s_inv;
    let i_kh = SMatrix::<f64, D, D>::identity() - k * h;
    // Joseph form keeps Σ symmetric PSD
    let cov = i_kh * prior.cov * i_kh.transpose() + k * n * k.transpose();
    Ok(Belief { mean: prior.mean + k * innovation, cov: symmetrize(cov) })
}

/// One Kalman predict/update for `x' = Ax + Bu + m`, `z = Cx + n`.
#[allow(clippy::too_many_arguments)]
pub fn kalman_update<const D: usize, const U: usize, const Z: usize>(
    est: &Belief<D>,
    u: &SVector<f64, U>,
    z: &SVector<f64, Z>,
    a: &SMatrix<f64, D, D>,
    b: &SMatrix<f64, D, U>,
    c: &SMatrix<f64, Z, D>,
    m: &SMatrix<f64, D, D>,
    n: &SMatrix<f64, Z, Z>,
) -> Result<Belief<D>, ControlError> {
    let prior = Belief { mean: a * est.mean + b * u, cov: symmetrize(a * est.cov * a.transpose() + m) };
    let y = z - c * prior.mean;
    measurement_update(&prior, &y, c, n)
}

/// Fixed point of the filter covariance recursion, iterated until the update
/// is below `tol` (max-abs).
pub fn stationary_covariance<const D: usize, const Z: usize>(
    a: &SMatrix<f64, D, D>,
    c: &SMatrix<f64, Z, D>,
    m: &SMatrix<f64, D, D>,
    n: &SMatrix<f64, Z, Z>,
    tol: f64,
) -> Result<SMatrix<f64, D, D>, ControlError> {
    let mut p = *m;
    for _ in 0..MAX_RICCATI_ITERATIONS {
        let prior = a * p * a.transpose() + m;
        let s = (c * prior * c.transpose() + n).try_inverse().ok_or(ControlError::SingularInnovation)?;
        let next = symmetrize(prior - prior * c.transpose() * s * c * prior);
        if (next - p).amax() <= tol {
            return Ok(next);
        }
        p = next;
    }
    Err(ControlError::RiccatiDiverged(MAX_RICCATI_ITERATIONS))
}

pub const MAX_RICCATI_ITERATIONS: usize = 100_000;
pub const RICCATI_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LqrSolution {
    /// `u = −K x`.
    pub gain: DMatrix<f64>,
    pub cost_to_go: DMatrix<f64>,
    pub iterations: usize,
}

/// Infinite-horizon discrete LQR by value iteration on the Riccati equation,
/// stopped when `max|ΔP| ≤ 1e-10·max(1, max|P|)`.
pub fn lqr_gain(a: &DMatrix<f64>, b: &DMatrix<f64>, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<LqrSolution, ControlError> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || q.shape() != (n, n) || r.shape() != (b.ncols(), b.ncols()) {
        return Err(ControlError::Shape("lqr_gain"));
    }
    let mut p = q.clone();
    for it in 1..=MAX_RICCATI_ITERATIONS {
        let (k, next) = riccati_step(a, b, q, r, &p)?;
        let delta = (&next - &p).amax();
        p = next;
        if delta <= RICCATI_TOLERANCE * p.amax().max(1.0) {
            return Ok(LqrSolution { gain: k, cost_to_go: p, iterations: it });
        }
    }
    Err(ControlError::RiccatiDiverged(MAX_RICCATI_ITERATIONS))
}

/// One backward Riccati step from cost-to-go `p`: returns the gain and the
/// new cost-to-go.
pub fn riccati_step(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>), ControlError> {
    let bt_p = b.transpose() * p;
    let s = r + &bt_p * b;
    let k = s.cholesky().ok_or(ControlError::SingularGain)?.solve(&(&bt_p * a));
    let next = q + a.transpose() * p * (a - b * &k);
    let next = (&next + next.transpose()) * 0.5;
    Ok((k, next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix2, Vector2};

    #[test]
    fn zero_innovation_keeps_prediction() {
        let est = Belief { mean: Vector2::new(1.0, 2.0), cov: Matrix2::identity() };
        let i = Matrix2::identity();
        let u = Vector2::new(0.5, -0.5);
        let z = Vector2::new(1.5, 1.5);
        let next = kalman_update(&est, &u, &z, &i, &i, &i, &(i * 0.1), &(i * 0.01)).unwrap();
        assert_eq!(next.mean, Vector2::new(1.5, 1.5));
    }

    #[test]
    fn noise_free_covariance_shrinks() {
        let mut est = Belief { mean: Vector2::zeros(), cov: Matrix2::identity() };
        let i = Matrix2::identity();
        let n = i * 1e-12;
        let mut prev = f64::INFINITY;
        for _ in 0..5 {
            est = kalman_update(&est, &Vector2::zeros(), &Vector2::zeros(), &i, &i, &i, &Matrix2::zeros(), &n).unwrap();
            let tr = est.cov.trace();
            assert!(tr <= prev);
            prev = tr;
        }
        assert!(prev < 1e-12);
    }

    #[test]
    fn singular_innovation() {
        let est = Belief { mean: Vector2::zeros(), cov: Matrix2::new(1.0, 0.0, 0.0, 0.0) };
        let i = Matrix2::identity();
        let z = Matrix2::zeros();
        let r = kalman_update(&est, &Vector2::zeros(), &Vector2::zeros(), &i, &i, &i, &z, &z);
        assert_eq!(r, Err(ControlError::SingularInnovation));
    }

    #[test]
    fn certain_prior_skips_update() {
        let est = Belief { mean: Vector2::new(1.0, 1.0), cov: Matrix2::zeros() };
        let i = Matrix2::identity();
        let z = Matrix2::zeros();
        let next = kalman_update(&est, &Vector2::zeros(), &Vector2::new(5.0, 5.0), &i, &i, &i, &z, &z).unwrap();
        assert_eq!(next, est);
    }

    #[test]
    fn heavy_control_cost_kills_gain() {
        let i = DMatrix::<f64>::identity(2, 2);
        let gains: Vec<f64> =
            [1e2, 1e4, 1e6].iter().map(|&r| lqr_gain(&i, &i, &i, &(&i * r)).unwrap().gain.amax()).collect();
        assert!(gains[0] > gains[1] && gains[1] > gains[2]);
        assert!(gains[2] < 2e-3);
    }

    #[test]
    fn shape_checked() {
        let i = DMatrix::<f64>::identity(2, 2);
        let r = DMatrix::<f64>::identity(3, 3);
        assert!(matches!(lqr_gain(&i, &i, &i, &r), Err(ControlError::Shape(_))));
    }
}
