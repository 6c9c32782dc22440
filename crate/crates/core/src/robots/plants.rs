use nalgebra::{DMatrix, Matrix2, Matrix3, SMatrix, SVector, SymmetricEigen, Vector2, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dubins::wrap_angle;

/// Draws `N(0, cov)` through the symmetric square root, so singular or zero
/// covariances are allowed.
pub fn sample_gaussian<const D: usize, R: Rng + ?Sized>(cov: &SMatrix<f64, D, D>, rng: &mut R) -> SVector<f64, D> {
    let xi = SVector::<f64, D>::from_fn(|_, _| rng.sample(StandardNormal));
    psd_sqrt(cov) * xi
}

pub fn psd_sqrt<const D: usize>(cov: &SMatrix<f64, D, D>) -> SMatrix<f64, D, D> {
    let eig = SymmetricEigen::new(DMatrix::from_column_slice(D, D, cov.as_slice()));
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let s = &eig.eigenvectors * DMatrix::from_diagonal(&root) * eig.eigenvectors.transpose();
    SMatrix::<f64, D, D>::from_column_slice(s.as_slice())
}

/// `x' = x + u + m`, `z = x' + n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearPlant {
    pub motion_cov: Matrix2<f64>,
    pub observation_cov: Matrix2<f64>,
    /// Controls longer than this are scaled back onto the ball.
    pub u_max: f64,
}

impl Default for LinearPlant {
    fn default() -> Self {
        LinearPlant {
            motion_cov: Matrix2::identity() * 0.1,
            observation_cov: Matrix2::identity() * 0.01,
            u_max: 1.0,
        }
    }
}

impl LinearPlant {
    pub fn noise_free(u_max: f64) -> Self {
        LinearPlant { motion_cov: Matrix2::zeros(), observation_cov: Matrix2::zeros(), u_max }
    }

    pub fn saturate(&self, u: Vector2<f64>) -> Vector2<f64> {
        let n = u.norm();
        if n > self.u_max { u * (self.u_max / n) } else { u }
    }

    /// Returns the next true state and its observation.
    pub fn step<R: Rng + ?Sized>(&self, x: &Vector2<f64>, u: &Vector2<f64>, rng: &mut R) -> (Vector2<f64>, Vector2<f64>) {
        let next = x + self.saturate(*u) + sample_gaussian(&self.motion_cov, rng);
        let z = next + sample_gaussian(&self.observation_cov, rng);
        (next, z)
    }
}

/// Unicycle at constant forward speed steered by angular velocity, with the
/// velocity-model noise of probabilistic robotics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DubinsPlant {
    pub speed: f64,
    pub tau: f64,
    pub omega_max: f64,
    /// Standard deviations of the executed linear and angular velocity.
    pub speed_noise: f64,
    pub omega_noise: f64,
    /// Standard deviation (rad) of the extra heading perturbation per step.
    pub rotation_noise: f64,
    pub observation_cov: Matrix3<f64>,
}

/// Below this turn rate the straight-line kinematics are used.
pub const STRAIGHT_OMEGA: f64 = 1e-6;

impl Default for DubinsPlant {
    fn default() -> Self {
        DubinsPlant {
            speed: 1.0,
            tau: 0.1,
            omega_max: 2.0,
            speed_noise: 0.1,
            omega_noise: 0.1,
            rotation_noise: 5f64.to_radians(),
            observation_cov: Matrix3::from_diagonal(&Vector3::new(0.01, 0.01, 0.0025)),
        }
    }
}

/// `sin(a)/a` and its derivative, with series near zero.
fn sinc(a: f64) -> (f64, f64) {
    if a.abs() < 1e-4 {
        let a2 = a * a;
        (1.0 - a2 / 6.0, -a / 3.0 + a * a2 / 30.0)
    } else {
        (a.sin() / a, (a * a.cos() - a.sin()) / (a * a))
    }
}

/// Exact unicycle step over `tau` at speed `v` and turn rate `w`, written
/// in chord form: `(v/w)(−sin θ + sin(θ + wτ)) = vτ·sinc(wτ/2)·cos(θ + wτ/2)`.
/// Below [`STRAIGHT_OMEGA`] the chord is the straight segment `vτ`.
pub fn unicycle(q: &Vector3<f64>, v: f64, w: f64, tau: f64) -> Vector3<f64> {
    let half = 0.5 * w * tau;
    let chord = if w.abs() < STRAIGHT_OMEGA { v * tau } else { v * tau * sinc(half).0 };
    let dir = q[2] + half;
    Vector3::new(q[0] + chord * dir.cos(), q[1] + chord * dir.sin(), wrap_angle(q[2] + w * tau))
}

impl DubinsPlant {
    pub fn noise_free() -> Self {
        DubinsPlant {
            speed_noise: 0.0,
            omega_noise: 0.0,
            rotation_noise: 0.0,
            observation_cov: Matrix3::zeros(),
            ..Default::default()
        }
    }

    /// This plant's speed, step, and turn limit without noise.
    pub fn noise_free_copy(&self) -> Self {
        DubinsPlant { speed: self.speed, tau: self.tau, omega_max: self.omega_max, ..Self::noise_free() }
    }

    pub fn saturate(&self, omega: f64) -> f64 {
        omega.clamp(-self.omega_max, self.omega_max)
    }

    pub fn nominal(&self, q: &Vector3<f64>, omega: f64) -> Vector3<f64> {
        unicycle(q, self.speed, omega, self.tau)
    }

    pub fn step<R: Rng + ?Sized>(&self, q: &Vector3<f64>, omega: f64, rng: &mut R) -> Vector3<f64> {
        let v = self.speed + self.speed_noise * rng.sample::<f64, _>(StandardNormal);
        let w = self.saturate(omega) + self.omega_noise * rng.sample::<f64, _>(StandardNormal);
        let mut next = unicycle(q, v, w, self.tau);
        next[2] = wrap_angle(next[2] + self.rotation_noise * rng.sample::<f64, _>(StandardNormal));
        next
    }

    pub fn observe<R: Rng + ?Sized>(&self, q: &Vector3<f64>, rng: &mut R) -> Vector3<f64> {
        let mut z = q + sample_gaussian(&self.observation_cov, rng);
        z[2] = wrap_angle(z[2]);
        z
    }

    /// Jacobians of the nominal step with respect to state and turn rate.
    pub fn jacobians(&self, q: &Vector3<f64>, omega: f64) -> (Matrix3<f64>, Vector3<f64>) {
        let (v, tau) = (self.speed, self.tau);
        let half = 0.5 * omega * tau;
        let (s, ds) = sinc(half);
        let dir = q[2] + half;
        let chord = v * tau * s;
        let mut a = Matrix3::identity();
        a[(0, 2)] = -chord * dir.sin();
        a[(1, 2)] = chord * dir.cos();
        let dchord = v * tau * ds * 0.5 * tau;
        let b = Vector3::new(
            dchord * dir.cos() - chord * 0.5 * tau * dir.sin(),
            dchord * dir.sin() + chord * 0.5 * tau * dir.cos(),
            tau,
        );
        (a, b)
    }

    /// State-space covariance of one step's noise, linearized at `(q, ω)`.
    pub fn process_cov(&self, q: &Vector3<f64>, omega: f64) -> Matrix3<f64> {
        let h = 1e-6;
        let dv = (unicycle(q, self.speed + h, omega, self.tau) - unicycle(q, self.speed - h, omega, self.tau)) / (2.0 * h);
        let mut dw = (unicycle(q, self.speed, omega + h, self.tau) - unicycle(q, self.speed, omega - h, self.tau)) / (2.0 * h);
        dw[2] = self.tau;
        let mut cov = dv * dv.transpose() * self.speed_noise.powi(2) + dw * dw.transpose() * self.omega_noise.powi(2);
        cov[(2, 2)] += self.rotation_noise.powi(2);
        cov
    }
}
