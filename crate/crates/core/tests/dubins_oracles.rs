use std::f64::consts::{PI, TAU};

use ccgp::chance::Segment;
use ccgp::geometry::Pose2;
use ccgp::robots::{DubinsPath, DubinsWord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
enum Turn {
    L,
    S,
    R,
}

fn m2p(a: f64) -> f64 {
    a.rem_euclid(TAU)
}

fn center(q: Pose2, rho: f64, left: bool) -> (f64, f64) {
    let s = if left { 1.0 } else { -1.0 };
    (q.x - s * rho * q.theta.sin(), q.y + s * rho * q.theta.cos())
}

/// Pieces for every tangent construction of every word, built from circle
/// geometry rather than the closed-form word equations.
fn geometric_candidates(q1: Pose2, q2: Pose2, rho: f64) -> Vec<Vec<(Turn, f64)>> {
    let mut out = Vec::new();
    for (l1, l2) in [(true, true), (false, false), (true, false), (false, true)] {
        let c1 = center(q1, rho, l1);
        let c2 = center(q2, rho, l2);
        let (dx, dy) = (c2.0 - c1.0, c2.1 - c1.1);
        let dist = dx.hypot(dy);
        let phi = dy.atan2(dx);
        let (psi, straight) = if l1 == l2 {
            (phi, dist)
        } else {
            if dist < 2.0 * rho {
                continue;
            }
            let s = (dist * dist - 4.0 * rho * rho).sqrt();
            let off = (2.0 * rho).atan2(s);
            (if l1 { phi + off } else { phi - off }, s)
        };
        let a1 = if l1 { m2p(psi - q1.theta) } else { m2p(q1.theta - psi) };
        let a2 = if l2 { m2p(q2.theta - psi) } else { m2p(psi - q2.theta) };
        let t1 = if l1 { Turn::L } else { Turn::R };
        let t2 = if l2 { Turn::L } else { Turn::R };
        out.push(vec![(t1, a1 * rho), (Turn::S, straight), (t2, a2 * rho)]);
    }
    for left in [true, false] {
        let c1 = center(q1, rho, left);
        let c3 = center(q2, rho, left);
        let (dx, dy) = (c3.0 - c1.0, c3.1 - c1.1);
        let d = dx.hypot(dy);
        if d > 4.0 * rho || d == 0.0 {
            continue;
        }
        let h = (4.0 * rho * rho - d * d / 4.0).sqrt();
        for side in [1.0, -1.0] {
            let c2 = (
                c1.0 + dx / 2.0 - side * h * dy / d,
                c1.1 + dy / 2.0 + side * h * dx / d,
            );
            let m1 = ((c1.0 + c2.0) / 2.0, (c1.1 + c2.1) / 2.0);
            let m2 = ((c2.0 + c3.0) / 2.0, (c2.1 + c3.1) / 2.0);
            let heading = |m: (f64, f64), c: (f64, f64)| {
                let u = ((m.0 - c.0) / rho, (m.1 - c.1) / rho);
                if left { u.0.atan2(-u.1) } else { (-u.0).atan2(u.1) }
            };
            let psi1 = heading(m1, c1);
            let psi2 = heading(m2, c3);
            let pieces = if left {
                vec![
                    (Turn::L, m2p(psi1 - q1.theta) * rho),
                    (Turn::R, m2p(psi1 - psi2) * rho),
                    (Turn::L, m2p(q2.theta - psi2) * rho),
                ]
            } else {
                vec![
                    (Turn::R, m2p(q1.theta - psi1) * rho),
                    (Turn::L, m2p(psi2 - psi1) * rho),
                    (Turn::R, m2p(psi2 - q2.theta) * rho),
                ]
            };
            out.push(pieces);
        }
    }
    out
}

fn integrate(q: Pose2, pieces: &[(Turn, f64)], rho: f64) -> Pose2 {
    let mut p = q;
    for &(turn, s) in pieces {
        // fine Euler-free stepping: exact arc formulas per small chunk
        let n = 1000;
        for _ in 0..n {
            let ds = s / n as f64;
            let w = match turn {
                Turn::L => 1.0 / rho,
                Turn::S => 0.0,
                Turn::R => -1.0 / rho,
            };
            let th = p.theta + 0.5 * w * ds;
            let chord = if w == 0.0 { ds } else { 2.0 / w * (0.5 * w * ds).sin() };
            p = Pose2::new(p.x + chord * th.cos(), p.y + chord * th.sin(), p.theta + w * ds);
        }
    }
    p
}

fn oracle_length(q1: Pose2, q2: Pose2, rho: f64) -> f64 {
    geometric_candidates(q1, q2, rho)
        .into_iter()
        .filter(|pieces| {
            let e = integrate(q1, pieces, rho);
            (e.x - q2.x).hypot(e.y - q2.y) < 1e-6 && m2p(e.theta - q2.theta).min(TAU - m2p(e.theta - q2.theta)) < 1e-6
        })
        .map(|p| p.iter().map(|x| x.1).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = m2p(a - b);
    d.min(TAU - d)
}

fn random_pose(rng: &mut ChaCha8Rng) -> Pose2 {
    Pose2::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-PI..PI))
}

#[test]
fn u_turn_matches_six_word_oracle() {
    let q1 = Pose2::new(0.0, 0.0, 0.0);
    let q2 = Pose2::new(0.0, 0.0, PI);
    let p = DubinsPath::shortest(q1, q2, 1.0);
    let oracle = oracle_length(q1, q2, 1.0);
    assert!((p.length() - oracle).abs() < 1e-9, "{} vs {oracle}", p.length());
}

#[test]
fn random_pairs_match_oracle_and_hit_endpoints() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..1000 {
        let q1 = random_pose(&mut rng);
        let q2 = random_pose(&mut rng);
        let rho = rng.random_range(0.3..2.0);
        let p = DubinsPath::shortest(q1, q2, rho);
        let e = p.end();
        assert!((e.x - q2.x).abs() < 1e-9 && (e.y - q2.y).abs() < 1e-9, "{q1:?} {q2:?} {p:?}");
        assert!(angle_gap(e.theta, q2.theta) < 1e-9);
        assert!(p.length() >= (q2.x - q1.x).hypot(q2.y - q1.y) - 1e-12);
        let oracle = oracle_length(q1, q2, rho);
        assert!((p.length() - oracle).abs() < 1e-6, "{q1:?} {q2:?}: {} vs {oracle}", p.length());
    }
}

#[test]
fn every_existing_word_reaches_goal() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..300 {
        let q1 = random_pose(&mut rng);
        let q2 = random_pose(&mut rng);
        for w in DubinsWord::ALL {
            if let Some(p) = DubinsPath::with_word(q1, q2, 1.0, w) {
                let e = p.end();
                assert!((e.x - q2.x).hypot(e.y - q2.y) < 1e-9, "{w:?}");
                assert!(angle_gap(e.theta, q2.theta) < 1e-9);
            }
        }
    }
}

#[test]
fn segment_speed_equals_length() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let p = DubinsPath::shortest(random_pose(&mut rng), random_pose(&mut rng), 1.0);
        let seg = Segment::dubins(p);
        let len = seg.length();
        let h = 1e-5;
        for k in 0..10 {
            let t = k as f64 / 10.0 + 0.03;
            let (a, b) = (seg.at(t), seg.at(t + h));
            let speed = (b.x - a.x).hypot(b.y - a.y) / h;
            assert!((speed - len).abs() <= 1e-3 * len, "speed {speed} len {len}");
        }
        assert!(angle_gap(seg.at(0.0).theta, p.start.theta) < 1e-12);
    }
}
