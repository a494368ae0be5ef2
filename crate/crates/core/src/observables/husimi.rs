use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{CMat, DensityMatrix, HilbertSpace, QuantumState};

/// Rectangular grid of cell centres in phase space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HusimiGrid {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub n_q: usize,
    pub n_p: usize,
}

impl Default for HusimiGrid {
    fn default() -> Self {
        Self {
            q_min: 0.0,
            q_max: TAU,
            p_min: -PI,
            p_max: PI,
            n_q: 200,
            n_p: 200,
        }
    }
}

impl HusimiGrid {
    pub fn validate(&self) -> Result<()> {
        if self.n_q == 0 || self.n_p == 0 {
            return Err(Error::InvalidParameter("empty Husimi grid".into()));
        }
        if !(self.q_max > self.q_min) || !(self.p_max > self.p_min) {
            return Err(Error::InvalidParameter(
                "Husimi grid bounds out of order".into(),
            ));
        }
        Ok(())
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / self.n_q as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / self.n_p as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dq() * self.dp()
    }

    pub fn q(&self, iq: usize) -> f64 {
        self.q_min + (iq as f64 + 0.5) * self.dq()
    }

    pub fn p(&self, ip: usize) -> f64 {
        self.p_min + (ip as f64 + 0.5) * self.dp()
    }
}

/// Convention for the stored values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HusimiNormalization {
    /// `<z|rho|z> / (2 pi hbar)`, integrating to one over the cylinder.
    PerTwoPiHbar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HusimiMap {
    pub grid: HusimiGrid,
    /// Row-major in momentum: index `ip * n_q + iq`.
    pub values: Vec<f64>,
    pub normalization: HusimiNormalization,
}

impl HusimiMap {
    pub fn value(&self, iq: usize, ip: usize) -> f64 {
        self.values[ip * self.grid.n_q + iq]
    }

    /// Riemann sum over the grid.
    pub fn total(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_area()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `(iq, ip)` of the largest value.
    pub fn argmax(&self) -> (usize, usize) {
        let i =
            self.values.iter().enumerate().fold(
                0,
                |best, (i, v)| if *v > self.values[best] { i } else { best },
            );
        (i % self.grid.n_q, i / self.grid.n_q)
    }

    /// Area of the cells holding more than `fraction` of the maximum.
    pub fn support_area(&self, fraction: f64) -> f64 {
        let cut = fraction * self.max();
        self.values.iter().filter(|v| **v > cut).count() as f64 * self.grid.cell_area()
    }
}

pub enum HusimiSource<'a> {
    Pure(&'a QuantumState),
    Mixed(&'a DensityMatrix),
}

impl<'a> From<&'a QuantumState> for HusimiSource<'a> {
    fn from(s: &'a QuantumState) -> Self {
        Self::Pure(s)
    }
}

impl<'a> From<&'a DensityMatrix> for HusimiSource<'a> {
    fn from(r: &'a DensityMatrix) -> Self {
        Self::Mixed(r)
    }
}

/// Husimi distribution on `grid`, using the same coherent states as
/// [`crate::quantum::coherent_state`] (normalized on the truncated basis).
pub fn husimi<'a>(
    source: impl Into<HusimiSource<'a>>,
    space: &HilbertSpace,
    grid: &HusimiGrid,
) -> Result<HusimiMap> {
    grid.validate()?;
    let half = space.dim() as f64 * space.hbar_eff() / 2.0;
    if grid.p_min < -half || grid.p_max > half {
        return Err(Error::InvalidParameter(format!(
            "Husimi grid leaves the momentum window +-{half}"
        )));
    }
    let n = space.dim();
    let envelopes = envelopes(space, grid);
    let raw = match source.into() {
        HusimiSource::Pure(psi) => {
            if psi.amplitudes.len() != n {
                return Err(Error::InvalidParameter(
                    "state dimension differs from N".into(),
                ));
            }
            // w[(n, ip)] = g_n(p) psi_n, then sum_n w e^{i q n}
            let w = CMat::from_fn(n, grid.n_p, |i, ip| psi.amplitudes[i] * envelopes[(i, ip)]);
            let phases = phase_table(grid, (0..n).map(|i| space.momentum(i)));
            (phases * w).map(|z| z.norm_sqr())
        }
        HusimiSource::Mixed(rho) => {
            if rho.dim() != n {
                return Err(Error::InvalidParameter(
                    "state dimension differs from N".into(),
                ));
            }
            // sum over diagonals d = n - m: s_d(p) = sum_m g_{m+d} g_m rho_{m+d,m}
            let rho = rho.matrix();
            let offsets = 2 * n - 1;
            let s = CMat::from_fn(offsets, grid.n_p, |k, ip| {
                let d = k as i64 - (n as i64 - 1);
                let (r0, c0) = if d >= 0 {
                    (d as usize, 0)
                } else {
                    (0, (-d) as usize)
                };
                (0..n - d.unsigned_abs() as usize)
                    .map(|j| {
                        rho[(r0 + j, c0 + j)] * (envelopes[(r0 + j, ip)] * envelopes[(c0 + j, ip)])
                    })
                    .sum()
            });
            let phases = phase_table(grid, (0..offsets).map(|k| k as i64 - (n as i64 - 1)));
            (phases * s).map(|z| z.re.max(0.0))
        }
    };
    let scale = 1.0 / (TAU * space.hbar_eff());
    let mut values = vec![0.0; grid.n_q * grid.n_p];
    for ip in 0..grid.n_p {
        for iq in 0..grid.n_q {
            values[ip * grid.n_q + iq] = raw[(iq, ip)] * scale;
        }
    }
    Ok(HusimiMap {
        grid: *grid,
        values,
        normalization: HusimiNormalization::PerTwoPiHbar,
    })
}

/// Normalized Gaussian envelopes `g_n(p)`, one column per grid momentum.
fn envelopes(space: &HilbertSpace, grid: &HusimiGrid) -> DMatrix<f64> {
    let hbar = space.hbar_eff();
    let mut g = DMatrix::from_fn(space.dim(), grid.n_p, |i, ip| {
        let x = space.momentum(i) as f64 - grid.p(ip) / hbar;
        (-0.5 * hbar * x * x).exp()
    });
    for mut col in g.column_iter_mut() {
        let norm = col.norm();
        col /= norm;
    }
    g
}

/// `e^{i q k}` for each grid `q` (rows) and each `k` (columns).
fn phase_table(grid: &HusimiGrid, ks: impl Iterator<Item = i64>) -> CMat {
    let ks: Vec<i64> = ks.collect();
    CMat::from_fn(grid.n_q, ks.len(), |iq, j| {
        Complex64::from_polar(1.0, grid.q(iq) * ks[j] as f64)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::coherent_state;

    fn space() -> HilbertSpace {
        HilbertSpace::new(256, 0.062).unwrap()
    }

    #[test]
    fn coherent_state_peaks_at_its_centre() {
        let s = space();
        let grid = HusimiGrid {
            n_q: 100,
            n_p: 100,
            ..Default::default()
        };
        // centre on a grid point
        let (q0, p0) = (grid.q(37), grid.p(61));
        let psi = coherent_state(q0, p0, &s).unwrap();
        let h = husimi(&psi, &s, &grid).unwrap();
        assert_eq!(h.argmax(), (37, 61));
        // overlap of a normalized state with itself
        assert!((h.max() * TAU * 0.062 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn normalization_for_contained_state() {
        let s = space();
        let psi = coherent_state(2.0, 0.3, &s).unwrap();
        let h = husimi(&psi, &s, &HusimiGrid::default()).unwrap();
        assert!((h.total() - 1.0).abs() < 1e-3, "{}", h.total());
    }

    #[test]
    fn pure_and_density_forms_agree() {
        let s = HilbertSpace::new(64, 0.25).unwrap();
        let a = coherent_state(1.0, 0.5, &s).unwrap();
        let b = coherent_state(4.0, -1.0, &s).unwrap();
        let psi = QuantumState {
            amplitudes: a
                .amplitudes
                .iter()
                .zip(&b.amplitudes)
                .map(|(x, y)| x + y)
                .collect(),
        }
        .normalized();
        let grid = HusimiGrid {
            n_q: 40,
            n_p: 30,
            ..Default::default()
        };
        let h1 = husimi(&psi, &s, &grid).unwrap();
        let h2 = husimi(&psi.density_matrix(), &s, &grid).unwrap();
        for (x, y) in h1.values.iter().zip(&h2.values) {
            assert!((x - y).abs() < 1e-12, "{x} {y}");
        }
    }

    #[test]
    fn adjoint_symmetrization_is_invisible() {
        let s = HilbertSpace::new(32, 0.5).unwrap();
        let psi = coherent_state(2.0, 1.0, &s).unwrap();
        let mut rho = psi.density_matrix().0;
        // add an anti-Hermitian perturbation
        rho[(3, 5)] += Complex64::new(0.0, 0.01);
        rho[(5, 3)] += Complex64::new(0.0, 0.01);
        let sym = (&rho + rho.adjoint()) * Complex64::from(0.5);
        let grid = HusimiGrid {
            n_q: 20,
            n_p: 20,
            ..Default::default()
        };
        let h1 = husimi(&DensityMatrix(rho), &s, &grid).unwrap();
        let h2 = husimi(&DensityMatrix(sym), &s, &grid).unwrap();
        for (x, y) in h1.values.iter().zip(&h2.values) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn grid_outside_window_rejected() {
        let s = HilbertSpace::new(64, 0.25).unwrap();
        let psi = coherent_state(2.0, 1.0, &s).unwrap();
        let grid = HusimiGrid {
            p_min: -10.0,
            ..Default::default()
        };
        assert!(husimi(&psi, &s, &grid).is_err());
    }
}
