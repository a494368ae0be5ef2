//! Quantization of the map on a truncated momentum basis.
//!
//! States and operators are stored in the momentum basis `|n>`,
//! `n = -N/2, ..., N/2 - 1`, at matrix index `n + N/2`. The position grid
//! `q_j = 2 pi j / N` is reached through FFTs.

mod coherent;
mod dissipator;
mod fourier;
mod propagator;

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub use coherent::{build_observables, coherent_state, mean_position, shift_operator, Observables};
pub use dissipator::{dissipator_apply, dissipator_rk4, DissipatorScheme};
pub use propagator::{
    build_period_propagators, edge_population, Ordering, PeriodMap, Picture, PropagatorConfig,
    Propagators,
};

pub type CMat = DMatrix<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Truncated momentum basis of dimension `N` with its FFT plans.
#[derive(Clone)]
pub struct HilbertSpace {
    dim: usize,
    hbar_eff: f64,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for HilbertSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HilbertSpace")
            .field("dim", &self.dim)
            .field("hbar_eff", &self.hbar_eff)
            .finish()
    }
}

impl HilbertSpace {
    /// `dim` must be even and the momentum window `dim * hbar_eff` at least `4 pi`.
    pub fn new(dim: usize, hbar_eff: f64) -> Result<Self> {
        if dim < 2 || !dim.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "N = {dim} must be even and >= 2"
            )));
        }
        if !(hbar_eff > 0.0) || !hbar_eff.is_finite() {
            return Err(Error::InvalidParameter(format!("hbar_eff = {hbar_eff}")));
        }
        if (dim as f64) * hbar_eff < 4.0 * PI * (1.0 - 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "N * hbar_eff = {} must cover at least 4 pi",
                dim as f64 * hbar_eff
            )));
        }
        Ok(Self::unchecked(dim, hbar_eff))
    }

    /// Skips the momentum-window requirement; for small test bases.
    pub fn unchecked(dim: usize, hbar_eff: f64) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dim,
            hbar_eff,
            fft: planner.plan_fft_forward(dim),
            ifft: planner.plan_fft_inverse(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hbar_eff(&self) -> f64 {
        self.hbar_eff
    }

    /// Momentum quantum number at matrix index `i`.
    #[inline]
    pub fn momentum(&self, i: usize) -> i64 {
        i as i64 - (self.dim / 2) as i64
    }

    /// Matrix index of momentum `n`, if it is inside the basis.
    pub fn index_of(&self, n: i64) -> Option<usize> {
        let i = n + (self.dim / 2) as i64;
        (0..self.dim as i64).contains(&i).then_some(i as usize)
    }

    pub fn position(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.dim as f64
    }
}

/// Pure state: momentum-basis amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    pub amplitudes: Vec<Complex64>,
}

impl QuantumState {
    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        self.amplitudes.iter_mut().for_each(|c| *c /= n);
        self
    }

    pub fn momentum_state(space: &HilbertSpace, n: i64) -> Result<Self> {
        let i = space
            .index_of(n)
            .ok_or_else(|| Error::InvalidParameter(format!("momentum {n} outside basis")))?;
        let mut amplitudes = vec![ZERO; space.dim()];
        amplitudes[i] = ONE;
        Ok(Self { amplitudes })
    }

    pub fn density_matrix(&self) -> DensityMatrix {
        let n = self.amplitudes.len();
        DensityMatrix(CMat::from_fn(n, n, |i, j| {
            self.amplitudes[i] * self.amplitudes[j].conj()
        }))
    }

    /// `<psi| X |psi>`.
    pub fn expectation(&self, x: &CMat) -> Complex64 {
        let v = &self.amplitudes;
        let mut acc = ZERO;
        for j in 0..v.len() {
            if v[j] == ZERO {
                continue;
            }
            let col = x.column(j);
            let mut s = ZERO;
            for i in 0..v.len() {
                s += v[i].conj() * col[i];
            }
            acc += s * v[j];
        }
        acc
    }
}

/// Schrödinger-picture density matrix in the momentum basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(pub CMat);

impl DensityMatrix {
    pub fn maximally_mixed(dim: usize) -> Self {
        Self(CMat::from_diagonal_element(
            dim,
            dim,
            Complex64::new(1.0 / dim as f64, 0.0),
        ))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn purity(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Largest entry of `rho - rho^dagger`.
    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.0)
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    /// Expectation value of the momentum quantum number `n`.
    pub fn mean_momentum_number(&self, space: &HilbertSpace) -> f64 {
        self.populations()
            .iter()
            .enumerate()
            .map(|(i, p)| p * space.momentum(i) as f64)
            .sum()
    }

    /// `Tr(B rho)`.
    pub fn expectation(&self, b: &CMat) -> Complex64 {
        trace_product(b, &self.0)
    }
}

/// Heisenberg-picture operator in the momentum basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator(pub CMat);

impl Operator {
    pub fn identity(dim: usize) -> Self {
        Self(CMat::identity(dim, dim))
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.0)
    }
}

pub fn hermiticity_error(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `Tr(A B)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> Complex64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Trace norm of a Hermitian matrix (sum of absolute eigenvalues).
pub fn trace_norm_hermitian(m: &CMat) -> f64 {
    let h = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().map(|e| e.abs()).sum()
}
