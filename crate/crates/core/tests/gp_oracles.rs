use ccgp::gp::{
    check_appendix_bounds, gram_matrix, lipschitz_k, lipschitz_q, taylor_series_sums,
    GpDistanceModel, Kernel,
};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_set(rng: &mut ChaCha8Rng, n: usize, dim: usize, span: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(0.0..span)).collect())
        .collect();
    let d = x
        .iter()
        .map(|p| p.iter().map(|v| (v * 1.3).sin()).sum::<f64>() + rng.random_range(-0.1..0.1))
        .collect();
    (x, d)
}

/// Dense `K + σ²I` built entry by entry, independent of the model.
fn dense_system(x: &[Vec<f64>], ell: f64, noise: f64) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| {
        let r2: f64 = x[i].iter().zip(&x[j]).map(|(a, b)| (a - b).powi(2)).sum();
        (-r2 / (2.0 * ell * ell)).exp() + if i == j { noise } else { 0.0 }
    })
}

fn oracle_posterior(x: &[Vec<f64>], d: &[f64], ell: f64, noise: f64, q: &[f64]) -> (f64, f64) {
    let inv = dense_system(x, ell, noise).try_inverse().unwrap();
    let k = DVector::from_iterator(
        x.len(),
        x.iter().map(|p| {
            let r2: f64 = p.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum();
            (-r2 / (2.0 * ell * ell)).exp()
        }),
    );
    let dv = DVector::from_column_slice(d);
    let mean = (k.transpose() * &inv * dv)[(0, 0)];
    let var = 1.0 - (k.transpose() * &inv * &k)[(0, 0)];
    (mean, var)
}

#[test]
fn factor_reproduces_dense_system() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (x, d) = random_set(&mut rng, 50, 2, 5.0);
    let model = GpDistanceModel::fit(&x, &d, Kernel::rbf(0.8).unwrap(), 0.02).unwrap();
    let l = model.factor().l();
    let rebuilt = &l * l.transpose();
    let dense = dense_system(&x, 0.8, 0.02);
    assert!((&rebuilt - &dense).abs().max() < 1e-10);
    assert!((&rebuilt - &dense).norm() < 1e-8);
    assert!((gram_matrix(model.kernel(), &x) - dense.clone() + DMatrix::identity(50, 50) * 0.02)
        .abs()
        .max()
        < 1e-15);
}

#[test]
fn posterior_matches_explicit_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for &n in &[1usize, 5, 20, 60, 100] {
        let (x, d) = random_set(&mut rng, n, 2, 4.0);
        let ell = rng.random_range(0.3..1.5);
        let noise = rng.random_range(0.005..0.5);
        let model = GpDistanceModel::fit(&x, &d, Kernel::rbf(ell).unwrap(), noise).unwrap();
        for _ in 0..50 {
            let q = vec![rng.random_range(-1.0..5.0), rng.random_range(-1.0..5.0)];
            let (m, v) = model.posterior(&q);
            let (mo, vo) = oracle_posterior(&x, &d, ell, noise, &q);
            assert!((m - mo).abs() < 1e-8, "n={n} mean {m} vs {mo}");
            assert!((v - vo.clamp(0.0, 1.0)).abs() < 1e-8, "n={n} var {v} vs {vo}");
        }
    }
}

#[test]
fn g_matches_posterior_ratio() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (x, d) = random_set(&mut rng, 40, 2, 4.0);
    let model = GpDistanceModel::fit(&x, &d, Kernel::rbf(0.6).unwrap(), 0.05).unwrap();
    for _ in 0..100 {
        let q = vec![rng.random_range(0.0..4.0), rng.random_range(0.0..4.0)];
        let (mo, vo) = oracle_posterior(&x, &d, 0.6, 0.05, &q);
        let expect = mo / (2.0 * vo).sqrt();
        let g = model.g(&q);
        assert!((g - expect).abs() < 1e-8 * expect.abs().max(1.0), "{g} vs {expect}");
        assert_eq!(g.signum(), model.posterior(&q).0.signum());
    }
}

#[test]
fn batched_posterior_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (x, d) = random_set(&mut rng, 60, 2, 5.0);
    let model = GpDistanceModel::fit(&x, &d, Kernel::rbf(0.8).unwrap(), 0.02).unwrap();
    let qs: Vec<Vec<f64>> = (0..64).map(|_| vec![rng.random_range(0.0..5.0), rng.random_range(0.0..5.0)]).collect();
    let batch = model.posterior_batch(&qs);
    let g = model.g_batch(&qs);
    for ((q, (m, v)), gq) in qs.iter().zip(&batch).zip(&g) {
        let (mo, vo) = oracle_posterior(&x, &d, 0.8, 0.02, q);
        assert!((m - mo).abs() < 1e-8 && (v - vo).abs() < 1e-8);
        assert!((gq - model.g(q)).abs() < 1e-8 * gq.abs().max(1.0));
    }
    assert!(model.posterior_batch(&[]).is_empty());
}

#[test]
fn large_training_set_fits() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (x, d) = random_set(&mut rng, 2000, 2, 10.0);
    let model = GpDistanceModel::fit(&x, &d, Kernel::rbf(0.7).unwrap(), 0.01).unwrap();
    assert_eq!(model.len(), 2000);
    let (m, v) = model.posterior(&[5.0, 5.0]);
    assert!(m.is_finite() && (0.0..=1.0).contains(&v));
}

#[test]
fn refit_is_bit_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (x, d) = random_set(&mut rng, 80, 2, 4.0);
    let a = GpDistanceModel::fit(&x, &d, Kernel::rbf(0.5).unwrap(), 0.01).unwrap();
    let b = GpDistanceModel::fit(&x, &d, Kernel::rbf(0.5).unwrap(), 0.01).unwrap();
    assert_eq!(a.factor().l(), b.factor().l());
    assert_eq!(a.weights(), b.weights());
}

#[test]
fn lipschitz_q_matches_eigen_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (x, d) = random_set(&mut rng, 5, 2, 2.0);
    let noise = 6.0;
    let model = GpDistanceModel::fit(&x, &d, Kernel::rbf(0.9).unwrap(), noise).unwrap();
    let bound = lipschitz_q(&model).unwrap();
    let m = dense_system(&x, 0.9, noise).try_inverse().unwrap();
    let lambda = SymmetricEigen::new(m.clone()).eigenvalues.max();
    let md = &m * DVector::from_column_slice(&d);
    let expect = md.norm() / 2f64.sqrt() * (1.0 / (1.0 - lambda * 5.0)).powf(1.5);
    assert!(bound.valid);
    assert!((bound.lambda_max - lambda).abs() < 1e-10);
    assert!((bound.l_q - expect).abs() < 1e-10, "{} vs {expect}", bound.l_q);
}

#[test]
fn rbf_peak_gradient_by_calculus_oracle() {
    // max over r of |r e^{-r²/2}| on a dense grid
    let peak = (0..=200_000)
        .map(|i| {
            let r = i as f64 * 1e-5;
            r * (-r * r / 2.0).exp()
        })
        .fold(0.0, f64::max);
    assert!((lipschitz_k(&Kernel::rbf(1.0).unwrap(), 1) - peak).abs() < 1e-9);
}

#[test]
fn kernel_vector_lipschitz_fuzz() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (x, d) = random_set(&mut rng, 30, 2, 3.0);
    let model = GpDistanceModel::fit(&x, &d, Kernel::rbf(0.4).unwrap(), 0.1).unwrap();
    let lk = lipschitz_k(model.kernel(), model.len());
    let mut violations = 0;
    for _ in 0..10_000 {
        let a = vec![rng.random_range(-1.0..4.0), rng.random_range(-1.0..4.0)];
        let s = rng.random_range(1e-4..2.0);
        let b = vec![a[0] + rng.random_range(-s..s), a[1] + rng.random_range(-s..s)];
        let dk = (model.kernel_vector(&a) - model.kernel_vector(&b)).norm();
        let dx = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        if dk > lk * dx + 1e-15 {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
}

fn valid_model(rng: &mut ChaCha8Rng, n: usize) -> (GpDistanceModel, Vec<Vec<f64>>, Vec<f64>) {
    let (x, d) = random_set(rng, n, 2, 2.0);
    let noise = n as f64 * rng.random_range(1.05..3.0);
    let model = GpDistanceModel::fit(&x, &d, Kernel::rbf(rng.random_range(0.2..1.0)).unwrap(), noise)
        .unwrap();
    (model, x, d)
}

#[test]
fn lemma_q_lipschitz_fuzz() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut violations = 0;
    let mut checked = 0;
    for _ in 0..20 {
        let n = rng.random_range(1..8);
        let (model, x, d) = valid_model(&mut rng, n);
        let bound = lipschitz_q(&model).unwrap();
        assert!(bound.valid && bound.l_q > 0.0);
        let m = dense_system(&x, model.kernel().length_scale(), model.noise_variance())
            .try_inverse()
            .unwrap();
        let dv = DVector::from_column_slice(&d);
        let q = |k: &DVector<f64>| {
            (k.transpose() * &m * &dv)[(0, 0)] / (2.0 * (1.0 - (k.transpose() * &m * k)[(0, 0)])).sqrt()
        };
        for _ in 0..500 {
            let k1 = DVector::from_fn(n, |_, _| rng.random_range(0.0..=1.0));
            let k2 = DVector::from_fn(n, |_, _| rng.random_range(0.0..=1.0));
            let lhs = (q(&k1) - q(&k2)).abs();
            assert!((q(&k1) - model.q(&k1)).abs() < 1e-10);
            if lhs > bound.l_q * (&k1 - &k2).norm() + 1e-12 {
                violations += 1;
            }
            checked += 1;
        }
    }
    assert_eq!(checked, 10_000);
    assert_eq!(violations, 0);
}

#[test]
fn composed_g_lipschitz_fuzz() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut violations = 0;
    for _ in 0..20 {
        let n = rng.random_range(1..8);
        let (model, _, _) = valid_model(&mut rng, n);
        let l = lipschitz_q(&model).unwrap().composed();
        for _ in 0..500 {
            let a = [rng.random_range(-1.0..3.0), rng.random_range(-1.0..3.0)];
            let b = [rng.random_range(-1.0..3.0), rng.random_range(-1.0..3.0)];
            let lhs = (model.g(&a) - model.g(&b)).abs();
            let dx = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            if lhs > l * dx + 1e-12 {
                violations += 1;
            }
        }
    }
    assert_eq!(violations, 0);
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(n, n) * rng.random_range(1e-3..1.0)
}

#[test]
fn appendix_inequalities_fuzz() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut checks = 0;
    let mut violations = 0;
    for _ in 0..10_000 {
        let n = rng.random_range(1..6);
        let m = random_spd(&mut rng, n) * rng.random_range(0.01..2.0);
        let x1 = DVector::from_fn(n, |_, _| rng.random_range(0.0..=1.0));
        let x2 = if rng.random_bool(0.2) {
            // nearby pairs stress the linearization
            x1.map(|v: f64| (v + rng.random_range(-1e-3..1e-3)).clamp(0.0, 1.0))
        } else {
            DVector::from_fn(n, |_, _| rng.random_range(0.0..=1.0))
        };
        let r = check_appendix_bounds(&m, &[(x1, x2)]);
        checks += r.checks;
        violations += r.violations.len();
    }
    assert_eq!(checks, 70_000);
    assert_eq!(violations, 0);
}

#[test]
fn appendix_hand_case() {
    let m = DMatrix::<f64>::identity(2, 2) * 0.5;
    let x1 = DVector::from_vec(vec![1.0, 0.0]);
    let x2 = DVector::from_vec(vec![0.0, 0.5]);
    let r = check_appendix_bounds(&m, &[(x1, x2)]);
    // x1ᵀMx1 = 0.5, x2ᵀMx2 = 0.125, ‖x1 − x2‖ = √1.25, λ = 0.5, n = 2
    assert!((r.lambda_max - 0.5).abs() < 1e-15);
    assert!(r.violations.is_empty());
    assert_eq!(r.checks, 7);
    let dx = 1.25f64.sqrt();
    let lhs = 0.375f64;
    let rhs = 2.0 * 0.5 * 2f64.sqrt() * dx;
    assert!(lhs <= rhs);
}

#[test]
fn series_partial_sums_converge() {
    for &(a, fifty_term_ok) in &[(0.1, true), (0.5, true), (0.9, false)] {
        let closed1 = (1.0 - a as f64).powf(-0.5);
        let closed2 = a / (2.0 * (1.0 - a as f64).powf(1.5));
        let (s1, s2) = taylor_series_sums(a, 50);
        let ok = (s1 - closed1).abs() < 1e-6 && (s2 - closed2).abs() < 1e-6;
        // At a = 0.9 fifty terms leave a tail of ~3e-3 and ~0.2; the series
        // still converges, just later.
        assert_eq!(ok, fifty_term_ok, "a={a}: {s1} vs {closed1}, {s2} vs {closed2}");
        let (s1, s2) = taylor_series_sums(a, 400);
        assert!((s1 - closed1).abs() < 1e-6 && (s2 - closed2).abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn variance_in_unit_interval(seed in 0u64..1000, qx in -3.0f64..8.0, qy in -3.0f64..8.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, d) = random_set(&mut rng, 25, 2, 5.0);
        let model = GpDistanceModel::fit(&x, &d, Kernel::rbf(0.5).unwrap(), 0.01).unwrap();
        let (_, v) = model.posterior(&[qx, qy]);
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn g_translation_consistent(seed in 0u64..1000, tx in -20.0f64..20.0, ty in -20.0f64..20.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, d) = random_set(&mut rng, 25, 2, 3.0);
        let shifted: Vec<Vec<f64>> = x.iter().map(|p| vec![p[0] + tx, p[1] + ty]).collect();
        let a = GpDistanceModel::fit(&x, &d, Kernel::rbf(0.6).unwrap(), 0.05).unwrap();
        let b = GpDistanceModel::fit(&shifted, &d, Kernel::rbf(0.6).unwrap(), 0.05).unwrap();
        let q = [rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)];
        let ga = a.g(&q);
        let gb = b.g(&[q[0] + tx, q[1] + ty]);
        prop_assert!((ga - gb).abs() <= 1e-9 * ga.abs().max(1.0));
    }
}
