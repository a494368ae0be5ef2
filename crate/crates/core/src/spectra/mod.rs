//! Leading eigenvalues of the quantum channel and of Ulam transition
//! matrices, and the decay rate set by the spectral gap.

mod krylov;
mod schur;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::MapParams;
use crate::quantum::{CMat, DensityMatrix, HilbertSpace, PeriodMap, PropagatorConfig};
use crate::sparse::CscMatrix;
use crate::ulam::TransitionMatrix;

use krylov::krylov_schur;
use schur::spectral_order;

/// Square linear map on `C^n`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) -> Result<()>;
}

impl LinearOperator for CscMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) -> Result<()> {
        self.mul_vec_complex(x, y);
        Ok(())
    }
}

impl LinearOperator for CMat {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) -> Result<()> {
        let r = self * nalgebra::DVector::from_column_slice(x);
        y.copy_from_slice(r.as_slice());
        Ok(())
    }
}

/// One period of the Schrödinger channel acting on column-major
/// vectorized `N x N` matrices.
pub struct ChannelOperator<'a> {
    map: &'a PeriodMap,
}

impl<'a> ChannelOperator<'a> {
    pub fn new(map: &'a PeriodMap) -> Self {
        Self { map }
    }
}

impl LinearOperator for ChannelOperator<'_> {
    fn dim(&self) -> usize {
        self.map.space().dim().pow(2)
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) -> Result<()> {
        let n = self.map.space().dim();
        let out = self.map.apply_channel(&CMat::from_column_slice(n, n, x))?;
        y.copy_from_slice(out.as_slice());
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrylovConfig {
    /// Subspace dimension as a multiple of the number of wanted eigenvalues.
    pub ncv_factor: usize,
    pub min_ncv: usize,
    pub max_restarts: usize,
    /// Ritz residual bound, relative to `max(|lambda|, 1)`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            ncv_factor: 3,
            min_ncv: 20,
            max_restarts: 500,
            tol: 1e-10,
            seed: 0x5eed,
        }
    }
}

impl KrylovConfig {
    pub fn subspace_dim(&self, n_eigs: usize) -> usize {
        (self.ncv_factor * n_eigs).max(self.min_ncv).max(n_eigs + 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Dense below `dense_max_dim`, Krylov above.
    Auto,
    Dense,
    Krylov,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectraConfig {
    pub solver: Solver,
    pub krylov: KrylovConfig,
    /// Largest operator dimension handled densely under `Auto`
    /// (1024 is the channel at `N = 32`).
    pub dense_max_dim: usize,
    pub propagator: PropagatorConfig,
}

impl Default for SpectraConfig {
    fn default() -> Self {
        Self {
            solver: Solver::Auto,
            krylov: KrylovConfig::default(),
            dense_max_dim: 1024,
            propagator: PropagatorConfig::default(),
        }
    }
}

impl SpectraConfig {
    fn use_dense(&self, dim: usize) -> bool {
        match self.solver {
            Solver::Dense => true,
            Solver::Krylov => false,
            Solver::Auto => dim <= self.dense_max_dim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMethod {
    Dense,
    Krylov,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Descending modulus; ties by ascending argument.
    pub eigenvalues: Vec<Complex64>,
    pub requested: usize,
    pub method: SolverMethod,
    /// Ritz residual estimates for the Krylov solver; empty for dense.
    pub residuals: Vec<f64>,
    pub restarts: usize,
    pub matvecs: usize,
    #[serde(skip)]
    pub vectors: Option<Vec<Vec<Complex64>>>,
}

impl SpectrumResult {
    pub fn moduli(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.norm()).collect()
    }
}

fn dense_result(mut eigenvalues: Vec<Complex64>, n_eigs: usize) -> SpectrumResult {
    eigenvalues.sort_by(spectral_order);
    eigenvalues.truncate(n_eigs);
    SpectrumResult {
        eigenvalues,
        requested: n_eigs,
        method: SolverMethod::Dense,
        residuals: Vec::new(),
        restarts: 0,
        matvecs: 0,
        vectors: None,
    }
}

/// Largest-modulus eigenvalues of a general operator by Krylov–Schur.
pub fn krylov_eigenvalues<A: LinearOperator + ?Sized>(
    op: &A,
    n_eigs: usize,
    config: &KrylovConfig,
    want_vectors: bool,
) -> Result<SpectrumResult> {
    let out = krylov_schur(op, n_eigs, config, want_vectors)?;
    // the Schur ordering already follows spectral_order
    Ok(SpectrumResult {
        eigenvalues: out.eigenvalues,
        requested: n_eigs,
        method: SolverMethod::Krylov,
        residuals: out.residual_estimates,
        restarts: out.restarts,
        matvecs: out.matvecs,
        vectors: out.vectors,
    })
}

/// All eigenvalues of a real dense matrix.
pub fn dense_real_eigenvalues(m: DMatrix<f64>) -> Vec<Complex64> {
    m.complex_eigenvalues().iter().copied().collect()
}

/// The channel as a real `N^2 x N^2` matrix on the Hilbert–Schmidt
/// orthonormal basis of Hermitian matrices: `E_ii`, `(E_ij + E_ji)/sqrt 2`
/// and `i (E_ij - E_ji)/sqrt 2` for `i < j`.
pub fn dense_channel_matrix(map: &PeriodMap) -> Result<DMatrix<f64>> {
    let n = map.space().dim();
    let mut basis = Vec::with_capacity(n * n);
    for i in 0..n {
        basis.push((i, i, 0u8));
        for j in i + 1..n {
            basis.push((i, j, 1));
            basis.push((i, j, 2));
        }
    }
    let r2 = std::f64::consts::SQRT_2;
    let coords = |y: &CMat| -> Vec<f64> {
        basis
            .iter()
            .map(|&(i, j, kind)| match kind {
                0 => y[(i, i)].re,
                1 => r2 * y[(i, j)].re,
                _ => r2 * y[(i, j)].im,
            })
            .collect()
    };
    let mut out = DMatrix::zeros(n * n, n * n);
    for (col, &(i, j, kind)) in basis.iter().enumerate() {
        let mut x = CMat::zeros(n, n);
        match kind {
            0 => x[(i, i)] = Complex64::new(1.0, 0.0),
            1 => {
                x[(i, j)] = Complex64::new(1.0 / r2, 0.0);
                x[(j, i)] = Complex64::new(1.0 / r2, 0.0);
            }
            _ => {
                x[(i, j)] = Complex64::new(0.0, 1.0 / r2);
                x[(j, i)] = Complex64::new(0.0, -1.0 / r2);
            }
        }
        let y = map.apply_channel(&x)?;
        for (row, v) in coords(&y).into_iter().enumerate() {
            out[(row, col)] = v;
        }
    }
    Ok(out)
}

/// Leading `n_eigs` eigenvalues of the one-period Schrödinger channel.
pub fn channel_spectrum(
    space: &HilbertSpace,
    params: &MapParams,
    config: &SpectraConfig,
    n_eigs: usize,
) -> Result<SpectrumResult> {
    let dim = space.dim().pow(2);
    if n_eigs == 0 || n_eigs >= dim {
        return Err(Error::InvalidParameter(format!(
            "n_eigs = {n_eigs} must be in 1..N^2"
        )));
    }
    let map = PeriodMap::new(space, params, &config.propagator)?;
    if config.use_dense(dim) {
        return Ok(dense_result(
            dense_real_eigenvalues(dense_channel_matrix(&map)?),
            n_eigs,
        ));
    }
    krylov_eigenvalues(&ChannelOperator::new(&map), n_eigs, &config.krylov, false)
}

/// Leading `n_eigs` eigenvalues of an Ulam transition matrix.
pub fn matrix_spectrum(
    t: &TransitionMatrix,
    n_eigs: usize,
    config: &SpectraConfig,
) -> Result<SpectrumResult> {
    sparse_spectrum(&t.matrix, n_eigs, config)
}

pub fn sparse_spectrum(
    m: &CscMatrix,
    n_eigs: usize,
    config: &SpectraConfig,
) -> Result<SpectrumResult> {
    let dim = m.rows();
    if m.cols() != dim {
        return Err(Error::InvalidParameter("matrix is not square".into()));
    }
    if n_eigs == 0 || n_eigs > dim {
        return Err(Error::InvalidParameter(format!(
            "n_eigs = {n_eigs} must be in 1..={dim}"
        )));
    }
    let dense = config.use_dense(dim) || config.krylov.subspace_dim(n_eigs) >= dim;
    if dense {
        let d = m.to_dense();
        let mat = DMatrix::from_fn(dim, dim, |r, c| d[r][c]);
        return Ok(dense_result(dense_real_eigenvalues(mat), n_eigs));
    }
    krylov_eigenvalues(m, n_eigs, &config.krylov, false)
}

/// Fixed point of the channel from the eigenvector of its leading
/// eigenvalue, scaled to unit trace and made exactly Hermitian.
pub fn channel_fixed_point(
    space: &HilbertSpace,
    params: &MapParams,
    config: &SpectraConfig,
) -> Result<DensityMatrix> {
    let map = PeriodMap::new(space, params, &config.propagator)?;
    let spec = krylov_eigenvalues(&ChannelOperator::new(&map), 2, &config.krylov, true)?;
    let v = &spec.vectors.as_ref().expect("vectors requested")[0];
    let n = space.dim();
    let x = CMat::from_column_slice(n, n, v);
    let tr = x.trace();
    if tr.norm() < 1e-12 {
        return Err(Error::Numerical("leading eigenvector is traceless".into()));
    }
    let x = x / tr;
    Ok(DensityMatrix((&x + x.adjoint()) * Complex64::from(0.5)))
}

/// `-2 ln |lambda_1|`, where `lambda_1` is the largest eigenvalue with
/// modulus below `1 - gap_tol`.
pub fn spectral_gap_rate(spec: &SpectrumResult, gap_tol: f64) -> Result<f64> {
    if spec.eigenvalues.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two eigenvalues".into(),
        ));
    }
    let lead = spec.eigenvalues[0];
    if (lead - Complex64::new(1.0, 0.0)).norm() > 1e-6 {
        return Err(Error::InvalidParameter(format!(
            "leading eigenvalue {lead} is not 1"
        )));
    }
    let count = spec.eigenvalues.len();
    spec.eigenvalues
        .iter()
        .map(|z| z.norm())
        .find(|m| *m < 1.0 - gap_tol)
        .map(|m| -2.0 * m.ln())
        .ok_or(Error::NoDecayingEigenvalue { count })
}
