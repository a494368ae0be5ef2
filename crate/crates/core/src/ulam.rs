//! Ulam discretization of the Perron-Frobenius operator of the classical map.
//!
//! Phase space `[0, 2pi) x [p_min, p_max)` is cut into square-ish cells.
//! Each cell is seeded with uniform samples that are pushed through one map
//! period; the fraction landing in each destination cell becomes a column of
//! a column-stochastic matrix.

use std::f64::consts::TAU;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{map_step, NoiseSpec, PhasePoint};
use crate::error::{Error, Result};
use crate::params::MapParams;
use crate::rng::stream_rng;
use crate::sparse::CscMatrix;

/// Cell partition of the phase-space window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UlamGrid {
    pub p_min: f64,
    pub p_max: f64,
    /// Requested linear cell size; actual sizes divide the window evenly.
    pub cell_side: f64,
    pub n_q: usize,
    pub n_p: usize,
}

impl UlamGrid {
    pub fn new(cell_side: f64, p_min: f64, p_max: f64) -> Result<Self> {
        if !(cell_side > 0.0) || !cell_side.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cell side {cell_side} must be positive"
            )));
        }
        if !(p_max > p_min) || !p_min.is_finite() || !p_max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "empty momentum window [{p_min}, {p_max})"
            )));
        }
        let n_q = (TAU / cell_side).ceil() as usize;
        let n_p = ((p_max - p_min) / cell_side).ceil() as usize;
        if n_q * n_p < 2 {
            return Err(Error::InvalidParameter(
                "grid needs at least two cells".into(),
            ));
        }
        Ok(Self {
            p_min,
            p_max,
            cell_side,
            n_q,
            n_p,
        })
    }

    /// Default window `[-pi, pi]`.
    pub fn standard(cell_side: f64) -> Result<Self> {
        Self::new(cell_side, -std::f64::consts::PI, std::f64::consts::PI)
    }

    pub fn cells(&self) -> usize {
        self.n_q * self.n_p
    }

    pub fn dq(&self) -> f64 {
        TAU / self.n_q as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / self.n_p as f64
    }

    pub fn index(&self, iq: usize, ip: usize) -> usize {
        ip * self.n_q + iq
    }

    /// Cell containing `x`, or `None` if its momentum is outside the window.
    pub fn cell_of(&self, x: PhasePoint) -> Option<usize> {
        if !(x.p >= self.p_min && x.p < self.p_max) {
            return None;
        }
        let ip = (((x.p - self.p_min) / self.dp()) as usize).min(self.n_p - 1);
        Some(self.index(self.q_cell(x.q), ip))
    }

    fn q_cell(&self, q: f64) -> usize {
        ((q / self.dq()) as usize).min(self.n_q - 1)
    }

    /// Cell of `x` with out-of-window momenta clamped onto the edge rows.
    fn clamped_cell(&self, x: PhasePoint) -> usize {
        let ip = if x.p < self.p_min {
            0
        } else if x.p >= self.p_max {
            self.n_p - 1
        } else {
            (((x.p - self.p_min) / self.dp()) as usize).min(self.n_p - 1)
        };
        self.index(self.q_cell(x.q), ip)
    }

    pub fn center(&self, cell: usize) -> PhasePoint {
        let iq = cell % self.n_q;
        let ip = cell / self.n_q;
        PhasePoint {
            q: (iq as f64 + 0.5) * self.dq(),
            p: self.p_min + (ip as f64 + 0.5) * self.dp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UlamConfig {
    pub samples_per_cell: usize,
    pub escape_threshold: f64,
    pub seed: u64,
}

impl Default for UlamConfig {
    fn default() -> Self {
        Self {
            samples_per_cell: 1_000,
            escape_threshold: 1e-3,
            seed: 0,
        }
    }
}

/// Column-stochastic cell-to-cell transition probabilities; column = source.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub grid: UlamGrid,
    pub matrix: CscMatrix,
    pub samples_per_cell: usize,
    /// Fraction of all samples that left the momentum window (reassigned to the edge rows).
    pub escaped_mass: f64,
}

impl TransitionMatrix {
    pub fn cells(&self) -> usize {
        self.grid.cells()
    }

    /// `y = T x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.mul_vec(x, y);
    }
}

/// Samples every cell and assembles the transition matrix.
///
/// Fails with [`Error::WindowTooSmall`] when more than
/// `config.escape_threshold` of the samples leave the momentum window.
pub fn build_ulam_matrix(
    params: &MapParams,
    grid: &UlamGrid,
    noise: &NoiseSpec,
    config: &UlamConfig,
) -> Result<TransitionMatrix> {
    params.validate()?;
    if config.samples_per_cell == 0 {
        return Err(Error::InvalidParameter(
            "samples_per_cell must be >= 1".into(),
        ));
    }
    let (dq, dp) = (grid.dq(), grid.dp());
    let n = config.samples_per_cell;
    let columns: Vec<(Vec<(usize, f64)>, usize)> = (0..grid.cells())
        .into_par_iter()
        .map(|cell| {
            let mut rng = stream_rng(config.seed, cell as u64);
            let (iq, ip) = (cell % grid.n_q, cell / grid.n_q);
            let q0 = iq as f64 * dq;
            let p0 = grid.p_min + ip as f64 * dp;
            let mut escaped = 0;
            let mut dest: Vec<usize> = (0..n)
                .map(|_| {
                    let x = PhasePoint {
                        q: q0 + rng.random::<f64>() * dq,
                        p: p0 + rng.random::<f64>() * dp,
                    };
                    let y = map_step(x, params, noise, &mut rng);
                    match grid.cell_of(y) {
                        Some(c) => c,
                        None => {
                            escaped += 1;
                            grid.clamped_cell(y)
                        }
                    }
                })
                .collect();
            dest.sort_unstable();
            let mut col: Vec<(usize, f64)> = Vec::new();
            for chunk in dest.chunk_by(|a, b| a == b) {
                col.push((chunk[0], chunk.len() as f64 / n as f64));
            }
            (col, escaped)
        })
        .collect();
    let escaped: usize = columns.iter().map(|(_, e)| e).sum();
    let escaped_mass = escaped as f64 / (grid.cells() * n) as f64;
    if escaped_mass > config.escape_threshold {
        return Err(Error::WindowTooSmall {
            escaped: escaped_mass,
            threshold: config.escape_threshold,
        });
    }
    let matrix =
        CscMatrix::from_columns(grid.cells(), columns.into_iter().map(|(c, _)| c).collect())?;
    Ok(TransitionMatrix {
        grid: *grid,
        matrix,
        samples_per_cell: n,
        escaped_mass,
    })
}

/// Like [`build_ulam_matrix`], but enlarges the momentum window until the
/// escaped mass is below threshold.
pub fn build_ulam_matrix_adaptive(
    params: &MapParams,
    grid: &UlamGrid,
    noise: &NoiseSpec,
    config: &UlamConfig,
) -> Result<TransitionMatrix> {
    let mut grid = *grid;
    for _ in 0..8 {
        match build_ulam_matrix(params, &grid, noise, config) {
            Err(Error::WindowTooSmall { .. }) => grid = enlarged(params, &grid, noise)?,
            other => return other,
        }
    }
    build_ulam_matrix(params, &grid, noise, config)
}

fn enlarged(params: &MapParams, grid: &UlamGrid, noise: &NoiseSpec) -> Result<UlamGrid> {
    let (mut lo, mut hi) = (grid.p_min, grid.p_max);
    let target = params.absorbing_interval().map(|(a, b)| {
        let margin = if noise.is_active() {
            6.0 * noise.sigma / (1.0 - params.gamma)
        } else {
            0.0
        };
        (a - margin, b + margin)
    });
    match target {
        Some((a, b)) if a < lo || b > hi => {
            lo = lo.min(a);
            hi = hi.max(b);
        }
        _ => {
            let w = 0.5 * (hi - lo);
            lo -= w;
            hi += w;
        }
    }
    UlamGrid::new(grid.cell_side, lo, hi)
}

/// Invariant density on the cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CellDensity {
    pub grid: UlamGrid,
    pub mass: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Fixed point of `T` by lazy power iteration `x <- (x + T x) / 2`, which
/// shares the fixed point of `T` but does not oscillate on periodic attractors.
pub fn stationary_density(t: &TransitionMatrix, tol: f64, max_iter: usize) -> Result<CellDensity> {
    let n = t.cells();
    let mut x = vec![1.0 / n as f64; n];
    let mut tx = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        t.apply(&x, &mut tx);
        residual = x.iter().zip(&tx).map(|(a, b)| (a - b).abs()).sum();
        if residual < tol {
            return Ok(CellDensity {
                grid: t.grid,
                mass: normalized(tx),
                residual,
                iterations: it,
            });
        }
        for (a, b) in x.iter_mut().zip(&tx) {
            *a = 0.5 * (*a + b);
        }
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual,
    })
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    v.iter_mut().for_each(|x| {
        if *x < 0.0 {
            *x = 0.0
        }
    });
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}
