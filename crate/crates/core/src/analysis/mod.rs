//! Fits of OTOC series, rank statistics, and the K sweeps that combine
//! quantum and classical quantities.

mod sweep;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::observables::TimeSeries;

pub use sweep::{k_grid, k_sweep, ComparisonRow, Pipeline, SweepConfig};

/// Presentation constants for overlaying the Lyapunov exponent and the IPR
/// on decay rates. Never used inside the physics.
pub const LYAPUNOV_SCALE: f64 = 0.55;
pub const LYAPUNOV_OFFSET: f64 = 0.605;
pub const IPR_SCALE: f64 = 3.5;

/// Least-squares line through `(t, ln C(t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Minus the slope.
    pub rate: f64,
    pub intercept: f64,
    pub t_min: u64,
    pub t_max: u64,
    pub points: usize,
    /// RMS residual of `ln C`.
    pub residual_rms: f64,
    /// 95% half-width on the rate; infinite with two points.
    pub confidence: f64,
    /// Set when `t_max` was pulled in because the series reached the floor.
    pub shrunk: bool,
}

pub fn log_linear_fit(series: &TimeSeries, t_min: u64, t_max: u64) -> Result<FitResult> {
    if t_max <= t_min {
        return Err(Error::InvalidParameter(format!(
            "empty window [{t_min}, {t_max}]"
        )));
    }
    let pts: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(t, _)| (t_min..=t_max).contains(*t))
        .map(|(t, v)| (*t as f64, *v))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidParameter(
            "fewer than two points in the window".into(),
        ));
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::NonPositive {
            t: *t as u64,
            value: *v,
        });
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (t, v)| (a + t, b + v.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (t, v) in &pts {
        sxx += (t - mx).powi(2);
        sxy += (t - mx) * (v.ln() - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts
        .iter()
        .map(|(t, v)| (v.ln() - intercept - slope * t).powi(2))
        .sum();
    let confidence = if pts.len() > 2 {
        let dof = n - 2.0;
        let t = StudentsT::new(0.0, 1.0, dof)
            .map_err(|e| Error::Numerical(e.to_string()))?
            .inverse_cdf(0.975);
        t * (sse / dof / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(FitResult {
        rate: -slope,
        intercept,
        t_min: pts[0].0 as u64,
        t_max: pts[pts.len() - 1].0 as u64,
        points: pts.len(),
        residual_rms: (sse / n).sqrt(),
        confidence,
        shrunk: false,
    })
}

/// As [`log_linear_fit`], but ends the window before the first value at or
/// below `floor`, flagging the fit when that happens.
pub fn floor_aware_fit(
    series: &TimeSeries,
    t_min: u64,
    t_max: u64,
    floor: f64,
) -> Result<FitResult> {
    let hit = series
        .times
        .iter()
        .zip(&series.values)
        .find(|(t, v)| (t_min..=t_max).contains(*t) && !(**v > floor))
        .map(|(t, _)| *t);
    match hit {
        Some(t) if t > t_min + 1 => {
            let mut fit = log_linear_fit(series, t_min, t - 1)?;
            fit.shrunk = true;
            Ok(fit)
        }
        Some(t) => Err(Error::NonPositive {
            t,
            value: series.at(t).unwrap_or(0.0),
        }),
        None => log_linear_fit(series, t_min, t_max),
    }
}

/// `ln C(1) - ln C(0)`.
pub fn growth_rate(series: &TimeSeries) -> Result<f64> {
    let c0 = series
        .at(0)
        .ok_or_else(|| Error::InvalidParameter("series lacks t = 0".into()))?;
    let c1 = series
        .at(1)
        .ok_or_else(|| Error::InvalidParameter("series lacks t = 1".into()))?;
    for (t, v) in [(0, c0), (1, c1)] {
        if !(v > 0.0) {
            return Err(Error::NonPositive { t, value: v });
        }
    }
    Ok(c1.ln() - c0.ln())
}

/// `(0.55 l + 0.605, 3.5 ipr)`.
pub fn rescale(lyapunov: f64, ipr: f64) -> (f64, f64) {
    (LYAPUNOV_SCALE * lyapunov + LYAPUNOV_OFFSET, IPR_SCALE * ipr)
}

/// Ranks starting at 1, ties sharing their average rank.
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|a, b| x[*a].total_cmp(&x[*b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation: Pearson correlation of the ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter(
            "need two equal-length samples of size >= 2".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite sample".into()));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Numerical(
            "constant sample has no rank correlation".into(),
        ));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Indices of interior points lower than both neighbours, plateaus counted
/// once at their first index. Endpoints count when lower than their one
/// neighbour.
pub fn local_minima(y: &[f64]) -> Vec<usize> {
    let n = y.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && y[j + 1] == y[i] {
            j += 1;
        }
        let left = i == 0 || y[i - 1] > y[i];
        let right = j + 1 == n || y[j + 1] > y[i];
        if left && right && n > 1 {
            out.push(i);
        }
        i = j + 1;
    }
    out
}

/// Maximal runs `[start, end]` (inclusive indices) where `pred` holds.
pub fn runs(flags: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, f) in flags.iter().enumerate() {
        match (f, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                out.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, flags.len() - 1));
    }
    out
}
