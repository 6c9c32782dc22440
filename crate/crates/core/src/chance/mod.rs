//! Chance constraints on the GP distance model and the CONNECT check that
//! certifies a whole segment through the global minimum of `g` along it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erf_inv};
use thiserror::Error;

use crate::geometry::Pose2;
use crate::gp::GpDistanceModel;
use crate::robots::DubinsPath;
use crate::shgo::{self, BoxDomain, ShgoOptions};

#[derive(Debug, Error, PartialEq)]
pub enum ChanceError {
    #[error("δ must lie in (0, 0.5], got {0}")]
    Delta(f64),
}

/// `c = erf⁻¹(1 − 2δ)`, polished by Newton steps on `erf` to 1e-12.
pub fn threshold_from_delta(delta: f64) -> Result<f64, ChanceError> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(ChanceError::Delta(delta));
    }
    let y = 1.0 - 2.0 * delta;
    if y == 0.0 {
        return Ok(0.0);
    }
    let mut c = erf_inv(y);
    for _ in 0..3 {
        let r = erf(c) - y;
        if r.abs() <= 1e-12 * y {
            break;
        }
        c -= r / (2.0 / PI.sqrt() * (-c * c).exp());
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChanceConstraint {
    pub delta: f64,
    pub c: f64,
}

impl ChanceConstraint {
    pub fn new(delta: f64) -> Result<Self, ChanceError> {
        Ok(ChanceConstraint { delta, c: threshold_from_delta(delta)? })
    }
}

/// Maps a planning state to GP input coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputMap {
    #[default]
    Position,
    /// `(x, y, h·cos θ, h·sin θ)`.
    PositionHeading { weight: f64 },
}

impl InputMap {
    pub fn dim(&self) -> usize {
        match self {
            InputMap::Position => 2,
            InputMap::PositionHeading { .. } => 4,
        }
    }

    pub fn project(&self, q: &Pose2) -> Vec<f64> {
        match *self {
            InputMap::Position => vec![q.x, q.y],
            InputMap::PositionHeading { weight } => {
                vec![q.x, q.y, weight * q.theta.cos(), weight * q.theta.sin()]
            }
        }
    }
}

/// A trajectory piece `s(t)`, `t ∈ [0, 1]`, parameterized proportionally to
/// arc length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    /// Straight line in the plane; heading is held at the start value.
    Line { start: Pose2, end: Pose2 },
    /// A Dubins word, traversed backwards when `reversed`.
    Dubins {
        path: DubinsPath,
        #[serde(default)]
        reversed: bool,
    },
}

impl Segment {
    pub fn line(start: Pose2, end: Pose2) -> Self {
        Segment::Line { start, end }
    }

    pub fn dubins(path: DubinsPath) -> Self {
        Segment::Dubins { path, reversed: false }
    }

    pub fn length(&self) -> f64 {
        match self {
            Segment::Line { start, end } => (end.x - start.x).hypot(end.y - start.y),
            Segment::Dubins { path, .. } => path.length(),
        }
    }

    pub fn at(&self, t: f64) -> Pose2 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Segment::Line { start, end } => {
                Pose2::new(start.x + t * (end.x - start.x), start.y + t * (end.y - start.y), start.theta)
            }
            Segment::Dubins { path, reversed } => {
                let s = if *reversed { 1.0 - t } else { t };
                path.sample(s * path.length())
            }
        }
    }

    pub fn start(&self) -> Pose2 {
        match self {
            Segment::Line { start, .. } => *start,
            _ => self.at(0.0),
        }
    }

    pub fn end(&self) -> Pose2 {
        match self {
            Segment::Line { end, .. } => *end,
            _ => self.at(1.0),
        }
    }

    /// Same curve traversed from the other end.
    pub fn reversed(&self) -> Self {
        match *self {
            Segment::Line { start, end } => Segment::Line { start: Pose2 { theta: start.theta, ..end }, end: start },
            Segment::Dubins { path, reversed } => Segment::Dubins { path, reversed: !reversed },
        }
    }

    /// Length of the image of the segment in GP input space, an upper bound
    /// for the Lipschitz scaling of `t ↦ project(s(t))`.
    pub fn input_length(&self, map: &InputMap) -> f64 {
        let curvature = match self {
            Segment::Line { .. } => 0.0,
            Segment::Dubins { path, .. } => 1.0 / path.rho,
        };
        match map {
            InputMap::Position => self.length(),
            InputMap::PositionHeading { weight } => self.length() * (1.0 + (weight * curvature).powi(2)).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectOptions {
    pub input_map: InputMap,
    /// Local-search settings; `n_samples` is the budget when no valid
    /// Lipschitz constant is known.
    pub shgo: ShgoOptions,
    /// Composed constant `L_q·L_k` when the bound is valid.
    pub lipschitz: Option<f64>,
    pub epsilon: f64,
    pub min_samples: usize,
    pub max_samples: usize,
}

impl Default for ConnectOptions {
    fn default() -> Self {
        ConnectOptions {
            input_map: InputMap::Position,
            shgo: ShgoOptions::default(),
            lipschitz: None,
            epsilon: 1e-2,
            min_samples: 32,
            max_samples: 512,
        }
    }
}

impl ConnectOptions {
    /// `max(min, ⌈L·len/ε⌉)` capped at `max` when a constant is known,
    /// otherwise the fixed default. The flag says whether `L` was used.
    pub fn sample_count(&self, input_length: f64) -> (usize, bool) {
        match self.lipschitz {
            Some(l) if l.is_finite() => {
                let n = (l * input_length / self.epsilon).ceil();
                let n = if n.is_finite() { n as usize } else { self.max_samples };
                (n.max(self.min_samples).min(self.max_samples), true)
            }
            _ => (self.shgo.n_samples, false),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectReport {
    /// `ĉ ≥ c` and the optimizer converged.
    pub accepted: bool,
    /// Infimum of `g` along the segment.
    pub c_hat: f64,
    pub t_star: f64,
    pub evaluations: usize,
    pub n_samples: usize,
    pub lipschitz_used: bool,
    pub converged: bool,
}

/// `g(x) ≥ c` at a single state.
pub fn point_satisfies(model: &GpDistanceModel, q: &Pose2, cc: &ChanceConstraint, map: &InputMap) -> bool {
    model.g(&map.project(q)) >= cc.c
}

/// Minimizes `t ↦ g(project(s(t)))` over `[0, 1]` and accepts the segment
/// when the minimum clears the threshold. A failed or non-converged search
/// rejects.
pub fn connect(
    model: &GpDistanceModel,
    segment: &Segment,
    cc: &ChanceConstraint,
    options: &ConnectOptions,
) -> ConnectReport {
    let (n_samples, lipschitz_used) = options.sample_count(segment.input_length(&options.input_map));
    let shgo_options = ShgoOptions { n_samples, ..options.shgo };
    let point = |t: f64| options.input_map.project(&segment.at(t));
    let objective = |t: &[f64]| model.g(&point(t[0]));
    let batch = |ts: &[Vec<f64>]| model.g_batch(&ts.iter().map(|t| point(t[0])).collect::<Vec<_>>());
    match shgo::minimize_batched(objective, batch, &BoxDomain::unit_interval(), &shgo_options) {
        Ok(r) => ConnectReport {
            accepted: r.converged && r.fun >= cc.c,
            c_hat: r.fun,
            t_star: r.x[0],
            evaluations: r.evaluations,
            n_samples,
            lipschitz_used,
            converged: r.converged,
        },
        Err(e) => {
            log::warn!("connect rejected on optimizer error: {e}");
            ConnectReport {
                accepted: false,
                c_hat: f64::NEG_INFINITY,
                t_star: f64::NAN,
                evaluations: 0,
                n_samples,
                lipschitz_used,
                converged: false,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::Kernel;

    #[test]
    fn threshold_edges() {
        assert_eq!(threshold_from_delta(0.5).unwrap(), 0.0);
        assert!(threshold_from_delta(0.0).is_err());
        assert!(threshold_from_delta(0.6).is_err());
        assert!(threshold_from_delta(f64::NAN).is_err());
        assert!((threshold_from_delta(0.05).unwrap() - 1.163087).abs() < 1e-6);
    }

    #[test]
    fn line_is_arc_length_parameterized() {
        let s = Segment::line(Pose2::new(0.0, 0.0, 0.0), Pose2::new(3.0, 4.0, 0.0));
        assert_eq!(s.length(), 5.0);
        let h = 1e-5;
        let a = s.at(0.3);
        let b = s.at(0.3 + h);
        assert!(((b.x - a.x).hypot(b.y - a.y) / h - 5.0).abs() < 1e-6);
    }

    #[test]
    fn degenerate_segment_is_point_check() {
        let m = GpDistanceModel::fit(&[vec![0.0, 0.0]], &[2.0], Kernel::rbf(1.0).unwrap(), 0.01).unwrap();
        let q = Pose2::new(0.0, 0.0, 0.0);
        let cc = ChanceConstraint::new(0.05).unwrap();
        let r = connect(&m, &Segment::line(q, q), &cc, &ConnectOptions::default());
        assert!((r.c_hat - m.g(&[0.0, 0.0])).abs() < 1e-12);
        assert_eq!(r.accepted, point_satisfies(&m, &q, &cc, &InputMap::Position));
    }

    #[test]
    fn sample_count_rule() {
        let mut o = ConnectOptions::default();
        assert_eq!(o.sample_count(1.0), (64, false));
        o.lipschitz = Some(1.0);
        assert_eq!(o.sample_count(0.1), (32, true));
        assert_eq!(o.sample_count(1.0), (100, true));
        assert_eq!(o.sample_count(100.0), (512, true));
    }
}
