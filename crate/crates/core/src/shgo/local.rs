//! Derivative-free local searches confined to a box.

use super::{BoxDomain, Evaluator, ShgoError};

#[derive(Debug, Clone)]
pub(super) struct LocalResult {
    pub x: Vec<f64>,
    pub fun: f64,
    pub converged: bool,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search on `[a, b]`. The interval shrinks until it is at
/// most `tol` wide or `budget` evaluations are spent.
pub(super) fn golden_section<F: FnMut(&[f64]) -> f64>(
    eval: &mut Evaluator<F>,
    (mut a, mut b): (f64, f64),
    start: (f64, f64),
    tol: f64,
    budget: usize,
) -> Result<LocalResult, ShgoError> {
    let mut best = start;
    let mut used = 0;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval.call(&[c])?;
    let mut fd = eval.call(&[d])?;
    used += 2;
    while b - a > tol && used < budget {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval.call(&[c])?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval.call(&[d])?;
        }
        used += 1;
        for (x, fx) in [(c, fc), (d, fd)] {
            if fx < best.1 {
                best = (x, fx);
            }
        }
    }
    for (x, fx) in [(c, fc), (d, fd)] {
        if fx < best.1 {
            best = (x, fx);
        }
    }
    Ok(LocalResult { x: vec![best.0], fun: best.1, converged: b - a <= tol })
}

/// Nelder–Mead with every trial point clamped into `domain`. Converges when
/// the simplex values spread by at most `tol` and its diameter is at most
/// `√tol` times the box size.
pub(super) fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    eval: &mut Evaluator<F>,
    domain: &BoxDomain,
    start: (&[f64], f64),
    tol: f64,
    budget: usize,
) -> Result<LocalResult, ShgoError> {
    let n = domain.dim();
    let clamp = |x: Vec<f64>| -> Vec<f64> {
        x.into_iter()
            .enumerate()
            .map(|(k, v)| v.clamp(domain.lower[k], domain.upper[k]))
            .collect()
    };
    let scale = (0..n).map(|k| domain.upper[k] - domain.lower[k]).fold(0.0, f64::max);
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(start.0.to_vec(), start.1)];
    let mut used = 0;
    for k in 0..n {
        let mut x = start.0.to_vec();
        let half = 0.5 * (domain.upper[k] - domain.lower[k]);
        let up = domain.upper[k] - x[k];
        let down = x[k] - domain.lower[k];
        x[k] += if up >= down { 0.5 * half.min(up) } else { -0.5 * half.min(down) };
        let fx = eval.call(&x)?;
        used += 1;
        simplex.push((x, fx));
    }
    let centroid = |s: &[(Vec<f64>, f64)]| -> Vec<f64> {
        let mut c = vec![0.0; n];
        for (x, _) in &s[..n] {
            for k in 0..n {
                c[k] += x[k] / n as f64;
            }
        }
        c
    };
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
    };
    let mut converged = false;
    while used < budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= tol && diameter <= tol.sqrt() * scale.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        let c = centroid(&simplex);
        let worst = simplex[n].clone();
        let xr = clamp(lerp(&c, &worst.0, -1.0));
        let fr = eval.call(&xr)?;
        used += 1;
        if fr < simplex[0].1 {
            let xe = clamp(lerp(&c, &worst.0, -2.0));
            let fe = eval.call(&xe)?;
            used += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let x = clamp(lerp(&c, &xr, 0.5));
                let f = eval.call(&x)?;
                (x, f)
            } else {
                let x = lerp(&c, &worst.0, 0.5);
                let f = eval.call(&x)?;
                (x, f)
            };
            used += 1;
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let x = lerp(&best, &item.0, 0.5);
                    item.1 = eval.call(&x)?;
                    item.0 = x;
                    used += 1;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fun) = simplex.swap_remove(0);
    Ok(LocalResult { x, fun, converged })
}
