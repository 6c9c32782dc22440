use std::f64::consts::{PI, TAU};

use ccgp::chance::Segment;
use ccgp::geometry::Pose2;
use ccgp::robots::{kalman_update, lqr_gain, Belief, DubinsPlant, DubinsSystem, LinearPlant, LinearSystem};
use nalgebra::{DMatrix, Matrix2, Matrix3, Vector2, Vector3};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Per-axis stationary posterior variance of the filter for a random walk
/// with process variance `m` and observation variance `n`, from the quadratic
/// `p² + m p − m n = 0`.
fn scalar_stationary(m: f64, n: f64) -> f64 {
    (-m + (m * m + 4.0 * m * n).sqrt()) / 2.0
}

#[test]
fn kalman_covariance_reaches_riccati_fixed_point() {
    let plant = LinearPlant::default();
    let i = Matrix2::identity();
    let mut est = Belief { mean: Vector2::zeros(), cov: Matrix2::identity() };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut truth = Vector2::zeros();
    for _ in 0..200 {
        let (x, z) = plant.step(&truth, &Vector2::zeros(), &mut rng);
        truth = x;
        est = kalman_update(&est, &Vector2::zeros(), &z, &i, &i, &i, &plant.motion_cov, &plant.observation_cov).unwrap();
    }
    let p = scalar_stationary(0.1, 0.01);
    assert!((p - 0.009160797831).abs() < 1e-11);
    assert!((est.cov[(0, 0)] - p).abs() < 1e-8 && (est.cov[(1, 1)] - p).abs() < 1e-8);
    assert!(est.cov[(0, 1)].abs() < 1e-8);
    let stationary = ccgp::robots::stationary_covariance(&i, &i, &plant.motion_cov, &plant.observation_cov, 1e-14).unwrap();
    assert!((stationary - est.cov).amax() < 1e-8);
}

#[test]
fn covariance_trace_independent_of_measurements() {
    let plant = LinearPlant::default();
    let i = Matrix2::identity();
    let trace = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut est = Belief { mean: Vector2::zeros(), cov: Matrix2::identity() * 0.5 };
        let mut truth = Vector2::zeros();
        let mut covs = Vec::new();
        for _ in 0..50 {
            let (x, z) = plant.step(&truth, &Vector2::new(0.3, 0.0), &mut rng);
            truth = x;
            est = kalman_update(&est, &Vector2::new(0.3, 0.0), &z, &i, &i, &i, &plant.motion_cov, &plant.observation_cov).unwrap();
            covs.push(est.cov);
        }
        covs
    };
    assert_eq!(trace(1), trace(2));
}

#[test]
fn scalar_lqr_matches_golden_ratio() {
    let one = DMatrix::from_element(1, 1, 1.0);
    let sol = lqr_gain(&one, &one, &one, &one).unwrap();
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((sol.cost_to_go[(0, 0)] - p).abs() < 1e-10, "{}", sol.cost_to_go[(0, 0)]);
    assert!((sol.gain[(0, 0)] - p / (1.0 + p)).abs() < 1e-10);
}

#[test]
fn planar_lqr_is_stabilizing() {
    let i = DMatrix::<f64>::identity(2, 2);
    let sol = lqr_gain(&i, &i, &i, &i).unwrap();
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let k = p / (1.0 + p);
    assert!((&sol.gain - &i * k).amax() < 1e-10);
    let closed = &i - &sol.gain;
    let radius = closed.symmetric_eigenvalues().amax();
    assert!(radius < 1.0);
}

#[test]
fn linear_tracking_error_decays_geometrically() {
    let sys = LinearSystem { plant: LinearPlant::noise_free(1.0), initial_cov: Matrix2::zeros(), ..Default::default() };
    let path = [Segment::line(Pose2::new(0.0, 0.0, 0.0), Pose2::new(30.0, 0.0, 0.0))];
    let reference = sys.reference(&path);
    let k = sys.gain().unwrap();
    let mut truth = Vector2::new(0.0, 0.4);
    let mut belief = Belief { mean: truth, cov: Matrix2::zeros() };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut errors = Vec::new();
    for step in 0..reference.len() - 1 {
        errors.push((truth - reference[step]).norm());
        let u = (reference[step + 1] - reference[step]) - k * (belief.mean - reference[step]);
        sys.advance(&mut truth, &mut belief, &u, &mut rng).unwrap();
    }
    let rate = 1.0 - k[(0, 0)];
    for w in errors.windows(2).take(20) {
        assert!((w[1] / w[0] - rate).abs() < 1e-9);
    }
    assert!(*errors.last().unwrap() < 1e-6);
}

#[test]
fn dubins_tracking_error_decays() {
    let sys = DubinsSystem {
        plant: DubinsPlant { observation_cov: Matrix3::identity() * 1e-12, ..DubinsPlant::noise_free() },
        initial_cov: Matrix3::zeros(),
        ..Default::default()
    };
    let path = [Segment::line(Pose2::new(0.0, 0.0, 0.0), Pose2::new(60.0, 0.0, 0.0))];
    let reference = sys.reference(&path, 1).unwrap();
    let mut truth = Vector3::new(0.0, 0.3, 0.1);
    let mut belief = Belief { mean: truth, cov: Matrix3::zeros() };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut errors = Vec::new();
    // speed is fixed, so only cross-track and heading error are controllable
    for step in 0..reference.nominal_steps {
        errors.push((truth[1] - reference.states[step][1]).abs().max((truth[2] - reference.states[step][2]).abs()));
        let w = sys.control(&reference, step, &belief.mean);
        sys.advance(&mut truth, &mut belief, w, &mut rng).unwrap();
    }
    // the envelope (max over 50-step blocks) shrinks, and ends below 1e-6
    let blocks: Vec<f64> = errors.chunks(50).map(|c| c.iter().copied().fold(0.0, f64::max)).collect();
    assert!(blocks.windows(2).all(|w| w[1] < w[0]), "{blocks:?}");
    assert!(*errors.last().unwrap() < 1e-6, "{}", errors.last().unwrap());
}

#[test]
fn increment_covariance_matches_motion_noise() {
    let plant = LinearPlant::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut x = Vector2::zeros();
    let mut incs = Vec::with_capacity(10_000);
    for _ in 0..10_000 {
        let (next, _) = plant.step(&x, &Vector2::zeros(), &mut rng);
        incs.push(next - x);
        x = next;
    }
    let n = incs.len() as f64;
    let mean = incs.iter().sum::<Vector2<f64>>() / n;
    let cov = incs.iter().map(|d| (d - mean) * (d - mean).transpose()).sum::<Matrix2<f64>>() / (n - 1.0);
    assert!((cov[(0, 0)] / 0.1 - 1.0).abs() < 0.1 && (cov[(1, 1)] / 0.1 - 1.0).abs() < 0.1, "{cov}");
    assert!(cov[(0, 1)].abs() < 0.01);
}

#[test]
fn full_circle_returns_to_start() {
    let plant = DubinsPlant::noise_free();
    let steps = 100;
    let omega = TAU / (plant.tau * steps as f64);
    let start = Vector3::new(1.0, -2.0, 0.4);
    let mut q = start;
    for _ in 0..steps {
        q = plant.nominal(&q, omega);
    }
    assert!((q[0] - start[0]).abs() < 1e-6 && (q[1] - start[1]).abs() < 1e-6);
    let dtheta = (q[2] - start[2]).rem_euclid(TAU);
    assert!(dtheta.min(TAU - dtheta) < 1e-6);
}

#[test]
fn seeded_steps_are_pinned() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (x, z) = LinearPlant::default().step(&Vector2::zeros(), &Vector2::new(0.5, 0.0), &mut rng);
    let q = DubinsPlant::default().step(&Vector3::zeros(), 0.5, &mut rng);
    let pins = [x[0], x[1], z[0], z[1], q[0], q[1], q[2]];
    let expected = [
        0.2803815995315301,
        0.43773225642233693,
        0.32432472224067244,
        0.5889684535318203,
        0.10367614390711326,
        0.0025833822750735494,
        -0.08404332563991224,
    ];
    for (a, b) in pins.iter().zip(expected) {
        assert!((a - b).abs() < 1e-12, "{pins:?}");
    }
}

proptest! {
    #[test]
    fn dubins_heading_stays_wrapped(x in -10.0..10.0f64, y in -10.0..10.0f64, th in -PI..PI, w in -5.0..5.0f64, seed in 0u64..1000) {
        let plant = DubinsPlant::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut q = Vector3::new(x, y, th);
        for _ in 0..20 {
            q = plant.step(&q, w, &mut rng);
            prop_assert!(q[2] > -PI && q[2] <= PI);
        }
    }
}
