//! Shortest bounded-curvature paths between planar poses.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::geometry::Pose2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DubinsWord {
    Lsl,
    Rsr,
    Lsr,
    Rsl,
    Rlr,
    Lrl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Piece {
    L,
    S,
    R,
}

impl DubinsWord {
    pub const ALL: [DubinsWord; 6] = [
        DubinsWord::Lsl,
        DubinsWord::Rsr,
        DubinsWord::Lsr,
        DubinsWord::Rsl,
        DubinsWord::Rlr,
        DubinsWord::Lrl,
    ];

    fn pieces(self) -> [Piece; 3] {
        use Piece::*;
        match self {
            DubinsWord::Lsl => [L, S, L],
            DubinsWord::Rsr => [R, S, R],
            DubinsWord::Lsr => [L, S, R],
            DubinsWord::Rsl => [R, S, L],
            DubinsWord::Rlr => [R, L, R],
            DubinsWord::Lrl => [L, R, L],
        }
    }
}

/// Angle in `[0, 2π)`; values within rounding of `2π` snap to 0 so that a
/// zero-length turn is not read as a full loop.
fn mod2pi(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU - 1e-12 { 0.0 } else { r }
}

/// Normalized piece lengths `(t, p, q)` for one word, in units of the turn
/// radius, or `None` when the word cannot join the poses.
fn word_lengths(word: DubinsWord, d: f64, alpha: f64, beta: f64) -> Option<[f64; 3]> {
    let (sa, ca, sb, cb) = (alpha.sin(), alpha.cos(), beta.sin(), beta.cos());
    let cab = (alpha - beta).cos();
    match word {
        DubinsWord::Lsl => {
            let p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sa - sb);
            if p2 < 0.0 {
                return None;
            }
            let tmp = (cb - ca).atan2(d + sa - sb);
            Some([mod2pi(tmp - alpha), p2.sqrt(), mod2pi(beta - tmp)])
        }
        DubinsWord::Rsr => {
            let p2 = 2.0 + d * d - 2.0 * cab + 2.0 * d * (sb - sa);
            if p2 < 0.0 {
                return None;
            }
            let tmp = (ca - cb).atan2(d - sa + sb);
            Some([mod2pi(alpha - tmp), p2.sqrt(), mod2pi(tmp - beta)])
        }
        DubinsWord::Lsr => {
            let p2 = -2.0 + d * d + 2.0 * cab + 2.0 * d * (sa + sb);
            if p2 < 0.0 {
                return None;
            }
            let p = p2.sqrt();
            let tmp = (-ca - cb).atan2(d + sa + sb) - (-2.0f64).atan2(p);
            Some([mod2pi(tmp - alpha), p, mod2pi(tmp - beta)])
        }
        DubinsWord::Rsl => {
            let p2 = -2.0 + d * d + 2.0 * cab - 2.0 * d * (sa + sb);
            if p2 < 0.0 {
                return None;
            }
            let p = p2.sqrt();
            let tmp = (ca + cb).atan2(d - sa - sb) - 2.0f64.atan2(p);
            Some([mod2pi(alpha - tmp), p, mod2pi(beta - tmp)])
        }
        DubinsWord::Rlr => {
            let tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sa - sb)) / 8.0;
            if tmp.abs() > 1.0 {
                return None;
            }
            let p = mod2pi(TAU - tmp.acos());
            let t = mod2pi(alpha - (ca - cb).atan2(d - sa + sb) + p / 2.0);
            Some([t, p, mod2pi(alpha - beta - t + p)])
        }
        DubinsWord::Lrl => {
            let tmp = (6.0 - d * d + 2.0 * cab + 2.0 * d * (sb - sa)) / 8.0;
            if tmp.abs() > 1.0 {
                return None;
            }
            let p = mod2pi(TAU - tmp.acos());
            let t = mod2pi(-alpha - (ca - cb).atan2(d + sa - sb) + p / 2.0);
            Some([t, p, mod2pi(beta - alpha - t + p)])
        }
    }
}

/// A Dubins word from `start` with turn radius `rho`; `lengths` are the three
/// piece lengths divided by `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DubinsPath {
    pub start: Pose2,
    pub rho: f64,
    pub word: DubinsWord,
    pub lengths: [f64; 3],
}

fn advance(q: Pose2, piece: Piece, s: f64, rho: f64) -> Pose2 {
    match piece {
        Piece::S => Pose2::new(q.x + s * q.theta.cos(), q.y + s * q.theta.sin(), q.theta),
        Piece::L => {
            let phi = s / rho;
            Pose2::new(
                q.x + rho * ((q.theta + phi).sin() - q.theta.sin()),
                q.y - rho * ((q.theta + phi).cos() - q.theta.cos()),
                q.theta + phi,
            )
        }
        Piece::R => {
            let phi = s / rho;
            Pose2::new(
                q.x - rho * ((q.theta - phi).sin() - q.theta.sin()),
                q.y + rho * ((q.theta - phi).cos() - q.theta.cos()),
                q.theta - phi,
            )
        }
    }
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(TAU) - PI;
    if r == -PI { PI } else { r }
}

impl DubinsPath {
    /// Path of one given word, if it exists.
    pub fn with_word(q1: Pose2, q2: Pose2, rho: f64, word: DubinsWord) -> Option<Self> {
        let (dx, dy) = (q2.x - q1.x, q2.y - q1.y);
        let d = dx.hypot(dy) / rho;
        let phi = if d > 0.0 { dy.atan2(dx) } else { q1.theta };
        let alpha = mod2pi(q1.theta - phi);
        let beta = mod2pi(q2.theta - phi);
        word_lengths(word, d, alpha, beta).map(|lengths| DubinsPath { start: q1, rho, word, lengths })
    }

    /// Shortest of the six words. Ties keep the earlier word in
    /// [`DubinsWord::ALL`].
    pub fn shortest(q1: Pose2, q2: Pose2, rho: f64) -> Self {
        DubinsWord::ALL
            .iter()
            .filter_map(|&w| Self::with_word(q1, q2, rho, w))
            .fold(None::<DubinsPath>, |best, p| match best {
                Some(b) if b.length() <= p.length() => Some(b),
                _ => Some(p),
            })
            .expect("LSL or RSR always exists")
    }

    pub fn length(&self) -> f64 {
        self.lengths.iter().sum::<f64>() * self.rho
    }

    /// Pose after arc length `s`, clamped to `[0, length]`. Heading wrapped.
    pub fn sample(&self, s: f64) -> Pose2 {
        let mut remaining = s.clamp(0.0, self.length());
        let mut q = self.start;
        for (piece, len) in self.word.pieces().into_iter().zip(self.lengths) {
            let seg = len * self.rho;
            let step = remaining.min(seg);
            q = advance(q, piece, step, self.rho);
            remaining -= step;
            if remaining <= 0.0 {
                break;
            }
        }
        Pose2::new(q.x, q.y, wrap_angle(q.theta))
    }

    pub fn end(&self) -> Pose2 {
        self.sample(self.length())
    }

    /// The same word cut after arc length `s`.
    pub fn truncated(&self, s: f64) -> Self {
        let mut remaining = s.clamp(0.0, self.length()) / self.rho;
        let mut lengths = [0.0; 3];
        for (out, len) in lengths.iter_mut().zip(self.lengths) {
            *out = remaining.min(len);
            remaining -= *out;
        }
        DubinsPath { lengths, ..*self }
    }

    /// Signed curvature of each piece (`+1/ρ` left, `−1/ρ` right, 0 straight)
    /// with its arc length.
    pub fn pieces(&self) -> [(f64, f64); 3] {
        let mut out = [(0.0, 0.0); 3];
        for (i, (piece, len)) in self.word.pieces().into_iter().zip(self.lengths).enumerate() {
            let k = match piece {
                Piece::L => 1.0 / self.rho,
                Piece::S => 0.0,
                Piece::R => -1.0 / self.rho,
            };
            out[i] = (k, len * self.rho);
        }
        out
    }
}
