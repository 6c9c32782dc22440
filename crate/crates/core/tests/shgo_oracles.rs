use ccgp::shgo::suite::{benchmark_suite, dense_grid_minimum, stabilization_function};
use ccgp::shgo::{
    build_complex, delaunay_2d, extract_minimizers, minimize, sobol_2d, unit_samples, BoxDomain,
    ShgoOptions,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform grid then ternary search in the bracketing cells.
fn grid_oracle_1d(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / (n - 1) as f64;
    let (i, _) = (0..n)
        .map(|i| (i, f(a + i as f64 * h)))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    let (mut lo, mut hi) = ((a + (i as f64 - 1.0) * h).max(a), (a + (i as f64 + 1.0) * h).min(b));
    while hi - lo > 1e-13 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) < f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(0.5 * (lo + hi)).min(f(a + i as f64 * h))
}

/// Grid then coordinate-wise ternary sweeps around the best cell.
fn grid_oracle_2d(f: &dyn Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], n: usize) -> f64 {
    let h = [(hi[0] - lo[0]) / (n - 1) as f64, (hi[1] - lo[1]) / (n - 1) as f64];
    let mut best = ([0.0, 0.0], f64::INFINITY);
    for i in 0..n {
        for j in 0..n {
            let x = [lo[0] + i as f64 * h[0], lo[1] + j as f64 * h[1]];
            let v = f(&x);
            if v < best.1 {
                best = (x, v);
            }
        }
    }
    let mut x = best.0;
    for _ in 0..200 {
        for k in 0..2 {
            let (mut a, mut b) = ((x[k] - h[k]).max(lo[k]), (x[k] + h[k]).min(hi[k]));
            while b - a > 1e-12 {
                let m1 = a + (b - a) / 3.0;
                let m2 = b - (b - a) / 3.0;
                let mut y1 = x;
                y1[k] = m1;
                let mut y2 = x;
                y2[k] = m2;
                if f(&y1) < f(&y2) {
                    b = m2;
                } else {
                    a = m1;
                }
            }
            let mut y = x;
            y[k] = 0.5 * (a + b);
            if f(&y) <= f(&x) {
                x = y;
            }
        }
    }
    f(&x).min(best.1)
}

#[test]
fn sobol_points_are_dyadically_stratified() {
    // a (0,2)-sequence puts exactly one of the first 2^k points in every
    // elementary box of area 2^-k
    for k in 1..=8u32 {
        let pts = sobol_2d(1 << k);
        for a in 0..=k {
            let b = k - a;
            let mut counts = vec![0; 1 << k];
            for p in &pts {
                let i = (p[0] * (1u64 << a) as f64) as usize;
                let j = (p[1] * (1u64 << b) as f64) as usize;
                counts[i * (1 << b) + j] += 1;
            }
            assert!(counts.iter().all(|&c| c == 1), "k={k} a={a}");
        }
    }
}

#[test]
fn delaunay_has_empty_circumcircles_and_covers_box() {
    for n in [8, 16, 64, 128, 256, 512] {
        let pts: Vec<[f64; 2]> = unit_samples(2, n).iter().map(|p| [p[0], p[1]]).collect();
        let tris = delaunay_2d(&pts);
        let mut area = 0.0;
        for t in &tris {
            let [a, b, c] = t.map(|i| pts[i]);
            let twice = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
            assert!(twice > 0.0, "triangle {t:?} not CCW");
            area += 0.5 * twice;
            // circumcenter by perpendicular bisectors
            let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
            let sq = |p: [f64; 2]| p[0] * p[0] + p[1] * p[1];
            let ux = (sq(a) * (b[1] - c[1]) + sq(b) * (c[1] - a[1]) + sq(c) * (a[1] - b[1])) / d;
            let uy = (sq(a) * (c[0] - b[0]) + sq(b) * (a[0] - c[0]) + sq(c) * (b[0] - a[0])) / d;
            let r2 = (a[0] - ux).powi(2) + (a[1] - uy).powi(2);
            for (i, p) in pts.iter().enumerate() {
                if t.contains(&i) {
                    continue;
                }
                let d2 = (p[0] - ux).powi(2) + (p[1] - uy).powi(2);
                assert!(d2 >= r2 * (1.0 - 1e-9), "point {i} inside circumcircle of {t:?}");
            }
        }
        assert!((area - 1.0).abs() < 1e-12, "n={n} area {area}");
        // Euler: a triangulated convex polygon with h hull and i interior points
        assert_eq!(tris.len(), 2 * (pts.len() - 4) + 2);
    }
}

#[test]
fn himmelblau_has_four_minimizers() {
    let f = |x: &[f64]| (x[0] * x[0] + x[1] - 11.0).powi(2) + (x[0] + x[1] * x[1] - 7.0).powi(2);
    // grid oracle: strict local minima over 8-neighbourhoods of a 200×200 grid
    let n = 200;
    let g = |i: usize, j: usize| {
        let h = 10.0 / (n - 1) as f64;
        f(&[-5.0 + i as f64 * h, -5.0 + j as f64 * h])
    };
    let mut basins = 0;
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let v = g(i, j);
            let is_min = (-1i32..=1).all(|di| {
                (-1i32..=1).all(|dj| {
                    (di == 0 && dj == 0) || v < g((i as i32 + di) as usize, (j as i32 + dj) as usize)
                })
            });
            basins += is_min as usize;
        }
    }
    assert_eq!(basins, 4);
    let d = BoxDomain::new(vec![-5.0, -5.0], vec![5.0, 5.0]).unwrap();
    let c = build_complex(f, &d, 128).unwrap();
    let m = extract_minimizers(&c);
    assert_eq!(m.len(), basins);
    let r = minimize(f, &d, &ShgoOptions { n_samples: 128, ..Default::default() }).unwrap();
    assert!(r.fun < 1e-6, "{r:?}");
}

#[test]
fn sin_product_matches_grid_oracle() {
    let f = |t: f64| (13.0 * t).sin() * (27.0 * t).sin() + 1.0;
    let oracle = grid_oracle_1d(&f, 0.0, 1.0, 100_000);
    let r = minimize(|x| f(x[0]), &BoxDomain::unit_interval(), &ShgoOptions::default()).unwrap();
    assert!((r.fun - oracle).abs() < 1e-6, "{} vs {oracle}", r.fun);
    assert!(r.converged);
}

#[test]
fn benchmark_suite_matches_grid_oracles() {
    let suite = benchmark_suite();
    assert_eq!(suite.len(), 12);
    for tf in &suite {
        let r = minimize(|x| tf.eval(x), &tf.domain(), &ShgoOptions { n_samples: tf.n_samples, ..Default::default() })
            .unwrap();
        let oracle = if tf.lower.len() == 1 {
            grid_oracle_1d(&|t| tf.eval(&[t]), tf.lower[0], tf.upper[0], 100_000)
        } else {
            grid_oracle_2d(&|x| tf.eval(x), &tf.lower, &tf.upper, 1000)
        };
        assert!((r.fun - oracle).abs() <= 1e-4, "{}: shgo {} oracle {oracle}", tf.name, r.fun);
        if tf.known_min.is_finite() {
            assert!((oracle - tf.known_min).abs() <= 1e-4, "{}: oracle {oracle}", tf.name);
        }
        let (_, lib) = dense_grid_minimum(&|x| tf.eval(x), &tf.domain(), if tf.lower.len() == 1 { 10_000 } else { 400 });
        assert!((lib - oracle).abs() <= 1e-4, "{}: library grid {lib} oracle {oracle}", tf.name);
    }
}

#[test]
fn minimizer_count_stabilizes() {
    let counts: Vec<usize> = [16, 32, 64, 128]
        .iter()
        .map(|&n| {
            let c = build_complex(|x| stabilization_function(x[0]), &BoxDomain::unit_interval(), n).unwrap();
            extract_minimizers(&c).len()
        })
        .collect();
    assert!(counts.windows(2).all(|w| w[0] == w[1]), "{counts:?}");
}

fn random_objective(seed: u64) -> impl Fn(&[f64]) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| (rng.random_range(0.2..1.0), rng.random_range(1.0..15.0), rng.random_range(0.0..6.3)))
        .collect();
    move |x: &[f64]| terms.iter().map(|(a, w, p)| a * (w * x[0] + p).sin()).sum::<f64>()
}

#[test]
fn more_samples_never_worsen_the_minimum() {
    let tol = ShgoOptions::default().local_tol;
    for seed in 0..50 {
        let f = random_objective(seed);
        let mut last = f64::INFINITY;
        for n in [9, 17, 33, 65, 129] {
            let r = minimize(&f, &BoxDomain::unit_interval(), &ShgoOptions { n_samples: n, ..Default::default() })
                .unwrap();
            assert!(r.fun <= last + tol, "seed {seed} n {n}: {} after {last}", r.fun);
            last = r.fun;
        }
    }
}

#[test]
fn lipschitz_error_bound_holds() {
    for seed in 0..20 {
        let f = random_objective(seed);
        let oracle = grid_oracle_1d(&|t| f(&[t]), 0.0, 1.0, 100_000);
        // |f'| ≤ Σ a·w
        let l = 15.0 * 4.0;
        let r = minimize(&f, &BoxDomain::unit_interval(), &ShgoOptions { n_samples: 16, lipschitz_hint: Some(l), ..Default::default() })
            .unwrap();
        assert!(r.fun - oracle <= r.error_bound.unwrap());
    }
}

proptest! {
    #[test]
    fn result_never_exceeds_sampled_minimum(seed in 0u64..1000, n in 3usize..80) {
        let f = random_objective(seed);
        let c = build_complex(&f, &BoxDomain::unit_interval(), n).unwrap();
        let sampled = c.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let r = minimize(&f, &BoxDomain::unit_interval(), &ShgoOptions { n_samples: n, ..Default::default() }).unwrap();
        prop_assert!(r.fun <= sampled);
    }

    #[test]
    fn result_never_exceeds_sampled_minimum_2d(seed in 0u64..1000, n in 4usize..60) {
        let g = random_objective(seed);
        let f = move |x: &[f64]| g(&[x[0]]) + g(&[x[1] + 0.37]);
        let d = BoxDomain::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let c = build_complex(&f, &d, n).unwrap();
        let sampled = c.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let r = minimize(&f, &d, &ShgoOptions { n_samples: n, ..Default::default() }).unwrap();
        prop_assert!(r.fun <= sampled);
    }
}
