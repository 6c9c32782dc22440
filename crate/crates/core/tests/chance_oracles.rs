use ccgp::chance::{connect, threshold_from_delta, ChanceConstraint, ConnectOptions, InputMap, Segment};
use ccgp::geometry::{Bounds, ConvexShape, Environment, Point, Pose2, RobotFootprint};
use ccgp::gp::{GpDistanceModel, Kernel};
use ccgp::robots::DubinsPath;
use ccgp::shgo::{minimize, BoxDomain, ShgoOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// erf by its Maclaurin series.
fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    while term.abs() > 1e-17 * sum.abs() {
        n += 1.0;
        term *= -x * x / n;
        sum += term / (2.0 * n + 1.0);
    }
    2.0 / std::f64::consts::PI.sqrt() * sum
}

fn inverse_by_bisection(y: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 6.0);
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if erf_series(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn thresholds_match_series_oracle() {
    for delta in [0.05, 0.25] {
        let oracle = inverse_by_bisection(1.0 - 2.0 * delta);
        let c = threshold_from_delta(delta).unwrap();
        assert!((c - oracle).abs() < 1e-10, "δ={delta}: {c} vs {oracle}");
    }
    assert!((threshold_from_delta(0.05).unwrap() - 1.163087).abs() < 1e-6);
    assert!((threshold_from_delta(0.25).unwrap() - 0.476936).abs() < 1e-6);
}

#[test]
fn random_thresholds_invert_erf() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let delta: f64 = rng.random_range(1e-4..0.5);
        let c = threshold_from_delta(delta).unwrap();
        let r = erf_series(c) + 2.0 * delta - 1.0;
        assert!(r.abs() <= 1e-10, "δ={delta} residual {r}");
    }
}

#[test]
fn threshold_strictly_decreasing() {
    let cs: Vec<f64> = (1..=50).map(|i| threshold_from_delta(i as f64 / 100.0).unwrap()).collect();
    assert!(cs.windows(2).all(|w| w[0] > w[1]));
    assert!(cs.iter().all(|&c| c >= 0.0));
}

struct Fixture {
    env: Environment,
    model: GpDistanceModel,
}

/// A 10×10 m world with two obstacles; the GP is trained on estimated
/// positions paired with distances at the true positions.
fn fixture() -> Fixture {
    let env = Environment::new(
        Bounds::new([0.0, 0.0], [10.0, 10.0]).unwrap(),
        vec![
            ConvexShape::rectangle(Point::new(3.0, 5.0), 1.5, 3.0).unwrap(),
            ConvexShape::circle(Point::new(7.0, 3.0), 1.0).unwrap(),
        ],
        0,
    )
    .unwrap();
    let robot = RobotFootprint::disc(0.2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let mut x = Vec::new();
    let mut d = Vec::new();
    for _ in 0..300 {
        let truth = Pose2::new(rng.random_range(0.0..10.0), rng.random_range(0.0..10.0), 0.0);
        let est = [truth.x + noise.sample(&mut rng), truth.y + noise.sample(&mut rng)];
        x.push(est.to_vec());
        d.push(env.distance_to_collision(&robot, &truth).unwrap());
    }
    let model = GpDistanceModel::fit(&x, &d, Kernel::rbf(0.7).unwrap(), 0.02).unwrap();
    Fixture { env, model }
}

fn dense_min(model: &GpDistanceModel, seg: &Segment, n: usize) -> (f64, f64) {
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            (t, model.g(&InputMap::Position.project(&seg.at(t))))
        })
        .fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
}

#[test]
fn free_space_segment_accepted() {
    let f = fixture();
    let cc = ChanceConstraint::new(0.05).unwrap();
    let seg = Segment::line(Pose2::new(6.0, 7.0, 0.0), Pose2::new(8.5, 8.0, 0.0));
    let r = connect(&f.model, &seg, &cc, &ConnectOptions::default());
    assert!(r.accepted, "{r:?}");
    let (_, g) = dense_min(&f.model, &seg, 1000);
    assert!(g >= cc.c);
    assert!(r.c_hat <= g + 1e-12);
}

#[test]
fn obstacle_crossing_segment_rejected() {
    let f = fixture();
    let cc = ChanceConstraint::new(0.05).unwrap();
    let seg = Segment::line(Pose2::new(1.0, 5.0, 0.0), Pose2::new(5.0, 5.0, 0.0));
    let r = connect(&f.model, &seg, &cc, &ConnectOptions::default());
    assert!(!r.accepted);
    let (t, g) = dense_min(&f.model, &seg, 1000);
    assert!(g < cc.c, "dense minimum {g} at t={t}");
    let mid = seg.at(t);
    assert!(f.env.clearance(&RobotFootprint::disc(0.2).unwrap(), &mid) < 0.5);
}

fn random_segment(rng: &mut ChaCha8Rng) -> Segment {
    let a = Pose2::new(rng.random_range(0.5..9.5), rng.random_range(0.5..9.5), rng.random_range(-3.1..3.1));
    let len = rng.random_range(0.0..1.5);
    let ang: f64 = rng.random_range(-3.1..3.1);
    if rng.random_bool(0.5) {
        let b = Pose2::new(a.x + len * ang.cos(), a.y + len * ang.sin(), 0.0);
        Segment::line(a, b)
    } else {
        let b = Pose2::new(a.x + len * ang.cos(), a.y + len * ang.sin(), rng.random_range(-3.1..3.1));
        Segment::dubins(DubinsPath::shortest(a, b, 1.0).truncated(2.0))
    }
}

#[test]
fn accepted_segments_pass_dense_audit() {
    let f = fixture();
    let cc = ChanceConstraint::new(0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut accepted = 0;
    for _ in 0..500 {
        let seg = random_segment(&mut rng);
        let r = connect(&f.model, &seg, &cc, &ConnectOptions::default());
        let (t, g) = dense_min(&f.model, &seg, 1000);
        if r.accepted {
            accepted += 1;
            assert!(g >= cc.c - 1e-3, "accepted with dense min {g} at t={t}, report {r:?}");
        }
        // the optimizer never reports more than the audit finds
        assert!(r.c_hat <= g + 1e-9);
    }
    assert!(accepted > 100 && accepted < 500, "fuzz should hit both outcomes: {accepted}");
}

#[test]
fn acceptance_is_monotone_in_delta() {
    let f = fixture();
    let deltas = [0.01, 0.05, 0.1, 0.2, 0.3];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..100 {
        let seg = random_segment(&mut rng);
        let accepted: Vec<bool> = deltas
            .iter()
            .map(|&d| connect(&f.model, &seg, &ChanceConstraint::new(d).unwrap(), &ConnectOptions::default()).accepted)
            .collect();
        for i in 0..accepted.len() {
            if accepted[i] {
                assert!(accepted[i..].iter().all(|&a| a), "{accepted:?}");
            }
        }
    }
}

#[test]
fn reversed_segment_gives_same_minimum() {
    let f = fixture();
    let cc = ChanceConstraint::new(0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let seg = random_segment(&mut rng);
        let fwd = connect(&f.model, &seg, &cc, &ConnectOptions::default());
        let rev = connect(&f.model, &seg.reversed(), &cc, &ConnectOptions::default());
        assert!((fwd.c_hat - rev.c_hat).abs() <= 1e-6, "{} vs {}", fwd.c_hat, rev.c_hat);
    }
}

#[test]
fn shgo_matches_grid_on_gp_objectives() {
    let f = fixture();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..20 {
        let seg = random_segment(&mut rng);
        let g = |t: &[f64]| f.model.g(&InputMap::Position.project(&seg.at(t[0])));
        let r = minimize(g, &BoxDomain::unit_interval(), &ShgoOptions::default()).unwrap();
        let grid = (0..10_000)
            .map(|i| g(&[i as f64 / 9_999.0]))
            .fold(f64::INFINITY, f64::min);
        assert!((r.fun - grid).abs() <= 1e-4, "{} vs {grid}", r.fun);
    }
}

#[test]
fn lipschitz_hint_sets_sample_count() {
    let f = fixture();
    let cc = ChanceConstraint::new(0.05).unwrap();
    let seg = Segment::line(Pose2::new(6.0, 7.0, 0.0), Pose2::new(6.5, 7.0, 0.0));
    let opts = ConnectOptions { lipschitz: Some(10.0), ..Default::default() };
    let r = connect(&f.model, &seg, &cc, &opts);
    assert!(r.lipschitz_used);
    assert_eq!(r.n_samples, 500);
}
