//! Supergradient error models.
//!
//! Errors enter the dual update additively inside the stepsize product. Two
//! regimes are modeled: zero-mean noise with bounded conditional second
//! moment (the martingale-difference case), and biased noise whose bias norm
//! stays below a budget (the neighborhood-convergence case). All
//! distributions have bounded support so the second-moment bound `K` holds
//! deterministically and pathwise bound checks stay certified.
//!
//! Draws are keyed by (seed, step): every step samples a full error vector
//! whether or not edges consume it, so schedules cannot alias the stream.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{step_stream, TAG_NOISE};

/// Zero-mean coordinate distribution on `[−half_width, half_width]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum ZeroMeanKind {
    /// Uniform on the interval; per-coordinate variance `b²/3`.
    Uniform { half_width: f64 },
    /// Bell-shaped (sum of three uniforms, rescaled), truncated by
    /// construction to the interval; per-coordinate variance `b²/9`.
    TruncatedBell { half_width: f64 },
}

impl ZeroMeanKind {
    pub fn half_width(&self) -> f64 {
        match *self {
            ZeroMeanKind::Uniform { half_width } | ZeroMeanKind::TruncatedBell { half_width } => {
                half_width
            }
        }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            ZeroMeanKind::Uniform { half_width } => half_width * (2.0 * rng.random::<f64>() - 1.0),
            ZeroMeanKind::TruncatedBell { half_width } => {
                let s: f64 = rng.random::<f64>() + rng.random::<f64>() + rng.random::<f64>();
                half_width * (s - 1.5) / 1.5
            }
        }
    }
}

/// Per-coordinate bias: one value broadcast everywhere or an explicit vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BiasSpec {
    Uniform(f64),
    PerCoordinate(Vec<f64>),
}

impl BiasSpec {
    pub fn at(&self, coord: usize) -> f64 {
        match self {
            BiasSpec::Uniform(b) => *b,
            BiasSpec::PerCoordinate(bs) => bs[coord],
        }
    }

    /// Euclidean norm of the bias vector in dimension `dim`.
    pub fn norm(&self, dim: usize) -> f64 {
        match self {
            BiasSpec::Uniform(b) => b.abs() * (dim as f64).sqrt(),
            BiasSpec::PerCoordinate(bs) => bs.iter().map(|b| b * b).sum::<f64>().sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NoiseSpec {
    /// Error-free supergradients.
    None,
    /// Zero conditional mean, coordinatewise bounded support.
    ZeroMean {
        #[serde(flatten)]
        kind: ZeroMeanKind,
    },
    /// Constant-norm-budget bias plus a zero-mean core.
    Biased {
        bias: BiasSpec,
        #[serde(flatten)]
        core: ZeroMeanKind,
    },
}

impl NoiseSpec {
    pub fn none() -> Self {
        NoiseSpec::None
    }

    pub fn uniform(half_width: f64) -> Self {
        NoiseSpec::ZeroMean {
            kind: ZeroMeanKind::Uniform { half_width },
        }
    }

    /// Deterministic bound `K` on `E[|e|²]` in dual dimension `dim`.
    pub fn second_moment_bound(&self, dim: usize) -> f64 {
        match self {
            NoiseSpec::None => 0.0,
            NoiseSpec::ZeroMean { kind } => {
                let b = kind.half_width();
                dim as f64 * b * b
            }
            NoiseSpec::Biased { bias, core } => {
                let b = core.half_width();
                let beta = bias.norm(dim);
                beta * beta + dim as f64 * b * b
            }
        }
    }

    /// Norm bound on the bias sequence (`0` for unbiased specs).
    pub fn bias_norm_bound(&self, dim: usize) -> f64 {
        match self {
            NoiseSpec::Biased { bias, .. } => bias.norm(dim),
            _ => 0.0,
        }
    }

    /// Deterministic bound on `|e|` per draw.
    pub fn support_bound(&self, dim: usize) -> f64 {
        match self {
            NoiseSpec::None => 0.0,
            NoiseSpec::ZeroMean { kind } => kind.half_width() * (dim as f64).sqrt(),
            NoiseSpec::Biased { bias, core } => {
                bias.norm(dim) + core.half_width() * (dim as f64).sqrt()
            }
        }
    }

    /// Samples the step-`k` error vector of dimension `dim`.
    pub fn sample(&self, dim: usize, seed: u64, step: u64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), dim);
        match self {
            NoiseSpec::None => out.fill(0.0),
            NoiseSpec::ZeroMean { kind } => {
                let mut rng = step_stream(seed, TAG_NOISE, step);
                for o in out.iter_mut() {
                    *o = kind.sample(&mut rng);
                }
            }
            NoiseSpec::Biased { bias, core } => {
                let mut rng = step_stream(seed, TAG_NOISE, step);
                for (coord, o) in out.iter_mut().enumerate() {
                    *o = bias.at(coord) + core.sample(&mut rng);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn no_noise_is_exactly_zero() {
        let mut e = vec![1.0; 4];
        NoiseSpec::none().sample(4, 1, 0, &mut e);
        assert_eq!(e, vec![0.0; 4]);
    }

    #[test]
    fn zero_mean_uniform_moments() {
        let b = 0.1;
        let spec = NoiseSpec::uniform(b);
        let dim = 2;
        let draws: u64 = 1_000_000;
        let mut e = vec![0.0; dim];
        let mut mean = vec![0.0; dim];
        let mut sq = 0.0;
        for k in 0..draws {
            spec.sample(dim, 99, k, &mut e);
            for (m, &x) in mean.iter_mut().zip(&e) {
                *m += x;
                assert!(x.abs() <= b);
            }
            sq += e.iter().map(|x| x * x).sum::<f64>();
        }
        // CLT width: 4 σ/√n with σ = b/√3
        let width = 4.0 * (b / 3.0f64.sqrt()) / (draws as f64).sqrt();
        for m in &mean {
            assert!((m / draws as f64).abs() <= width);
        }
        assert!(sq / draws as f64 <= spec.second_moment_bound(dim));
    }

    #[test]
    fn truncated_bell_stays_in_support() {
        let spec = NoiseSpec::ZeroMean {
            kind: ZeroMeanKind::TruncatedBell { half_width: 0.2 },
        };
        let mut e = vec![0.0; 3];
        for k in 0..10_000 {
            spec.sample(3, 5, k, &mut e);
            assert!(e.iter().all(|x| x.abs() <= 0.2));
        }
    }

    #[test]
    fn degenerate_bias_is_exact() {
        let spec = NoiseSpec::Biased {
            bias: BiasSpec::Uniform(0.05),
            core: ZeroMeanKind::Uniform { half_width: 0.0 },
        };
        let mut e = vec![0.0; 3];
        spec.sample(3, 7, 11, &mut e);
        assert_eq!(e, vec![0.05; 3]);
    }

    #[test]
    fn support_bound_holds_pathwise() {
        let spec = NoiseSpec::Biased {
            bias: BiasSpec::PerCoordinate(vec![0.02, -0.01]),
            core: ZeroMeanKind::Uniform { half_width: 0.1 },
        };
        let bound = spec.support_bound(2);
        let mut e = vec![0.0; 2];
        for k in 0..5000 {
            spec.sample(2, 3, k, &mut e);
            assert!(norm(&e) <= bound + 1e-12);
        }
    }

    #[test]
    fn draws_keyed_by_step_not_consumption() {
        let spec = NoiseSpec::uniform(0.3);
        let mut a = vec![0.0; 2];
        let mut b = vec![0.0; 2];
        spec.sample(2, 10, 500, &mut a);
        spec.sample(2, 10, 3, &mut b); // out-of-order consumption
        spec.sample(2, 10, 500, &mut b);
        assert_eq!(a, b);
    }
}
