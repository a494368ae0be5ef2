use std::f64::consts::{PI, TAU};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{jacobian, map_step_det, PhasePoint};
use crate::error::{Error, Result};
use crate::params::MapParams;
use crate::rng::stream_rng;

/// Trajectory lengths for Lyapunov estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovConfig {
    pub transient: usize,
    /// Total steps including the transient.
    pub total: usize,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self {
            transient: 1_000,
            total: 101_000,
        }
    }
}

impl LyapunovConfig {
    fn check(&self) -> Result<()> {
        if self.total <= self.transient {
            return Err(Error::InvalidParameter(format!(
                "total steps {} must exceed transient {}",
                self.total, self.transient
            )));
        }
        Ok(())
    }
}

/// A phase point carrying a unit tangent vector and the accumulated log growth.
#[derive(Debug, Clone, Copy)]
pub struct TangentFrame {
    pub point: PhasePoint,
    pub v: [f64; 2],
    pub log_growth: f64,
}

impl TangentFrame {
    pub fn new(point: PhasePoint) -> Self {
        Self {
            point,
            v: [1.0, 0.0],
            log_growth: 0.0,
        }
    }

    /// Advances one period, renormalizing the tangent vector.
    pub fn step(&mut self, params: &MapParams, step: usize) -> Result<()> {
        let j = jacobian(self.point, params);
        let w = [
            j[0][0] * self.v[0] + j[0][1] * self.v[1],
            j[1][0] * self.v[0] + j[1][1] * self.v[1],
        ];
        let norm = w[0].hypot(w[1]);
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Numerical(format!(
                "tangent vector degenerate at step {step}"
            )));
        }
        self.v = [w[0] / norm, w[1] / norm];
        self.log_growth += norm.ln();
        self.point = map_step_det(self.point, params);
        if !self.point.p.is_finite() {
            return Err(Error::Divergent {
                step,
                p: self.point.p,
            });
        }
        Ok(())
    }

    pub fn reset(&mut self) {
        self.log_growth = 0.0;
    }
}

/// Largest Lyapunov exponent of the orbit of `x0`.
pub fn max_lyapunov(x0: PhasePoint, params: &MapParams, config: &LyapunovConfig) -> Result<f64> {
    config.check()?;
    let mut frame = TangentFrame::new(x0);
    for t in 0..config.transient {
        frame.step(params, t)?;
    }
    frame.reset();
    for t in config.transient..config.total {
        frame.step(params, t)?;
    }
    Ok(frame.log_growth / (config.total - config.transient) as f64)
}

/// Both Lyapunov exponents via repeated Gram-Schmidt of two tangent vectors,
/// largest first.
pub fn lyapunov_spectrum(
    x0: PhasePoint,
    params: &MapParams,
    config: &LyapunovConfig,
) -> Result<[f64; 2]> {
    config.check()?;
    let mut x = x0;
    let mut e1 = [1.0, 0.0];
    let mut e2 = [0.0, 1.0];
    let mut sums = [0.0; 2];
    for t in 0..config.total {
        let j = jacobian(x, params);
        let apply = |v: [f64; 2]| {
            [
                j[0][0] * v[0] + j[0][1] * v[1],
                j[1][0] * v[0] + j[1][1] * v[1],
            ]
        };
        let w1 = apply(e1);
        let mut w2 = apply(e2);
        let r11 = w1[0].hypot(w1[1]);
        e1 = [w1[0] / r11, w1[1] / r11];
        let proj = w2[0] * e1[0] + w2[1] * e1[1];
        w2 = [w2[0] - proj * e1[0], w2[1] - proj * e1[1]];
        let r22 = w2[0].hypot(w2[1]);
        e2 = [w2[0] / r22, w2[1] / r22];
        if t >= config.transient {
            sums[0] += r11.ln();
            sums[1] += r22.ln();
        }
        x = map_step_det(x, params);
        if !x.p.is_finite() || !(r22 > 0.0) {
            return Err(Error::Divergent { step: t, p: x.p });
        }
    }
    let n = (config.total - config.transient) as f64;
    Ok([sums[0] / n, sums[1] / n])
}

/// Mean of [`max_lyapunov`] over uniformly drawn initial conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovAverage {
    pub mean: f64,
    pub std_dev: f64,
    pub values: Vec<f64>,
    pub failed: usize,
}

impl LyapunovAverage {
    pub fn standard_error(&self) -> f64 {
        self.std_dev / (self.values.len().max(1) as f64).sqrt()
    }
}

/// Averages the largest exponent over `count` initial conditions drawn
/// uniformly from `[0, 2pi) x [-pi, pi]`. Trajectory `i` draws from stream `i`
/// of `seed`, so results do not depend on scheduling.
pub fn averaged_max_lyapunov(
    params: &MapParams,
    count: usize,
    seed: u64,
    config: &LyapunovConfig,
) -> Result<LyapunovAverage> {
    if count == 0 {
        return Err(Error::InvalidParameter(
            "need at least one trajectory".into(),
        ));
    }
    config.check()?;
    let results: Vec<Result<f64>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let x0 = PhasePoint::new(rng.random_range(0.0..TAU), rng.random_range(-PI..=PI));
            max_lyapunov(x0, params, config)
        })
        .collect();
    let values: Vec<f64> = results
        .iter()
        .filter_map(|r| r.as_ref().ok().copied())
        .collect();
    let failed = count - values.len();
    if values.is_empty() {
        return Err(results.into_iter().find_map(|r| r.err()).unwrap());
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    Ok(LyapunovAverage {
        mean,
        std_dev: var.sqrt(),
        values,
        failed,
    })
}

/// Initial condition used by trajectory `index` of [`averaged_max_lyapunov`].
pub fn averaged_initial_condition(seed: u64, index: usize) -> PhasePoint {
    let mut rng = stream_rng(seed, index as u64);
    PhasePoint::new(rng.random_range(0.0..TAU), rng.random_range(-PI..=PI))
}
