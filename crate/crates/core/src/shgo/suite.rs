//! Multimodal 1-D and 2-D test functions with a dense-grid reference.

use std::f64::consts::PI;

use super::BoxDomain;

#[derive(Debug, Clone)]
pub struct TestFunction {
    pub name: &'static str,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub n_samples: usize,
    pub f: fn(&[f64]) -> f64,
    /// Published global minimum.
    pub known_min: f64,
}

impl TestFunction {
    pub fn domain(&self) -> BoxDomain {
        BoxDomain { lower: self.lower.clone(), upper: self.upper.clone() }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

fn sin_product(x: &[f64]) -> f64 {
    (13.0 * x[0]).sin() * (27.0 * x[0]).sin() + 1.0
}

fn forrester(x: &[f64]) -> f64 {
    let t = x[0];
    (6.0 * t - 2.0).powi(2) * (12.0 * t - 4.0).sin()
}

fn gramacy_lee(x: &[f64]) -> f64 {
    let t = x[0];
    (10.0 * PI * t).sin() / (2.0 * t) + (t - 1.0).powi(4)
}

fn sin_ten_thirds(x: &[f64]) -> f64 {
    x[0].sin() + (10.0 * x[0] / 3.0).sin()
}

fn shubert_1d(x: &[f64]) -> f64 {
    (1..=5)
        .map(|i| {
            let i = i as f64;
            i * ((i + 1.0) * x[0] + i).cos()
        })
        .sum()
}

fn rastrigin_1d(x: &[f64]) -> f64 {
    10.0 + x[0] * x[0] - 10.0 * (2.0 * PI * x[0]).cos()
}

fn himmelblau(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (a * a + b - 11.0).powi(2) + (a + b * b - 7.0).powi(2)
}

fn six_hump_camel(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (4.0 - 2.1 * a * a + a.powi(4) / 3.0) * a * a + a * b + (-4.0 + 4.0 * b * b) * b * b
}

fn branin(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let c1 = 5.1 / (4.0 * PI * PI);
    let c2 = 5.0 / PI;
    (b - c1 * a * a + c2 * a - 6.0).powi(2) + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * a.cos() + 10.0
}

fn rosenbrock(x: &[f64]) -> f64 {
    (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
}

fn goldstein_price(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    let p = 1.0
        + (a + b + 1.0).powi(2) * (19.0 - 14.0 * a + 3.0 * a * a - 14.0 * b + 6.0 * a * b + 3.0 * b * b);
    let q = 30.0
        + (2.0 * a - 3.0 * b).powi(2)
            * (18.0 - 32.0 * a + 12.0 * a * a + 48.0 * b - 36.0 * a * b + 27.0 * b * b);
    p * q
}

fn styblinski_tang(x: &[f64]) -> f64 {
    x.iter().map(|v| v.powi(4) - 16.0 * v * v + 5.0 * v).sum::<f64>() / 2.0
}

/// The twelve benchmark functions, with the sample count used for each.
pub fn benchmark_suite() -> Vec<TestFunction> {
    let one = |name, a: f64, b: f64, n, f, known_min| TestFunction {
        name,
        lower: vec![a],
        upper: vec![b],
        n_samples: n,
        f,
        known_min,
    };
    let two = |name, lo: [f64; 2], hi: [f64; 2], n, f, known_min| TestFunction {
        name,
        lower: lo.to_vec(),
        upper: hi.to_vec(),
        n_samples: n,
        f,
        known_min,
    };
    vec![
        one("sin_product", 0.0, 1.0, 64, sin_product as fn(&[f64]) -> f64, f64::NAN),
        one("forrester", 0.0, 1.0, 32, forrester, -6.020_740_055_767_08),
        one("gramacy_lee", 0.5, 2.5, 64, gramacy_lee, -0.869_011_134_989_500_5),
        one("sin_ten_thirds", 2.7, 7.5, 32, sin_ten_thirds, -1.899_599_349_152_113),
        one("shubert_1d", -10.0, 10.0, 256, shubert_1d, -12.870_885_49),
        one("rastrigin_1d", -5.12, 5.12, 128, rastrigin_1d, 0.0),
        two("himmelblau", [-5.0, -5.0], [5.0, 5.0], 128, himmelblau, 0.0),
        two("six_hump_camel", [-3.0, -2.0], [3.0, 2.0], 128, six_hump_camel, -1.031_628_453_489_877),
        two("branin", [-5.0, 0.0], [10.0, 15.0], 128, branin, 0.397_887_357_729_738),
        two("rosenbrock", [-2.0, -2.0], [2.0, 2.0], 128, rosenbrock, 0.0),
        two("goldstein_price", [-2.0, -2.0], [2.0, 2.0], 256, goldstein_price, 3.0),
        two("styblinski_tang", [-5.0, -5.0], [5.0, 5.0], 128, styblinski_tang, -78.332_331_4),
    ]
}

/// Fixed 1-D test function used for the minimizer-count stabilization check.
pub fn stabilization_function(t: f64) -> f64 {
    (6.0 * PI * t).sin() + 0.5 * t
}

/// Minimum over a uniform grid with `per_axis` points per axis, followed by a
/// shrinking compass search around the best grid point.
pub fn dense_grid_minimum(f: &dyn Fn(&[f64]) -> f64, domain: &BoxDomain, per_axis: usize) -> (Vec<f64>, f64) {
    let dim = domain.dim();
    let h: Vec<f64> = (0..dim)
        .map(|k| (domain.upper[k] - domain.lower[k]) / (per_axis - 1) as f64)
        .collect();
    let mut best = (domain.lower.clone(), f64::INFINITY);
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    loop {
        for k in 0..dim {
            x[k] = domain.lower[k] + idx[k] as f64 * h[k];
        }
        let v = f(&x);
        if v < best.1 {
            best = (x.clone(), v);
        }
        let mut k = 0;
        while k < dim {
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == dim {
            break;
        }
    }
    let mut step = h.clone();
    while step.iter().any(|s| *s > 1e-12) {
        let mut improved = false;
        for k in 0..dim {
            for sign in [-1.0, 1.0] {
                let mut y = best.0.clone();
                y[k] = (y[k] + sign * step[k]).clamp(domain.lower[k], domain.upper[k]);
                let v = f(&y);
                if v < best.1 {
                    best = (y, v);
                    improved = true;
                }
            }
        }
        if !improved {
            step.iter_mut().for_each(|s| *s *= 0.5);
        }
    }
    best
}
