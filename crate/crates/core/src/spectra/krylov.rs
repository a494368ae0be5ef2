//! Krylov–Schur iteration for the largest-modulus eigenvalues of a linear
//! operator on `C^n`.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::schur::{complex_schur, sort_schur, triangular_eigenvector};
use super::{KrylovConfig, LinearOperator};
use crate::error::{Error, Result};
use crate::quantum::CMat;
use crate::rng::stream_rng;

type CVec = DVector<Complex64>;

pub(crate) struct KrylovOutput {
    pub eigenvalues: Vec<Complex64>,
    pub residual_estimates: Vec<f64>,
    pub vectors: Option<Vec<Vec<Complex64>>>,
    pub restarts: usize,
    pub matvecs: usize,
}

fn random_vector(n: usize, seed: u64, stream: u64) -> CVec {
    let mut rng = stream_rng(seed, stream);
    CVec::from_fn(n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Orthogonalizes `w` against the first `j` columns of `v` (two classical
/// Gram–Schmidt passes), returning the coefficients.
fn orthogonalize(v: &[CVec], w: &mut CVec) -> Vec<Complex64> {
    let mut h = vec![Complex64::new(0.0, 0.0); v.len()];
    for _ in 0..2 {
        for (hi, vi) in h.iter_mut().zip(v) {
            let c = vi.dotc(w);
            w.axpy(-c, vi, Complex64::new(1.0, 0.0));
            *hi += c;
        }
    }
    h
}

struct Apply<'a, A: LinearOperator + ?Sized> {
    op: &'a A,
    buf: Vec<Complex64>,
    count: usize,
}

impl<A: LinearOperator + ?Sized> Apply<'_, A> {
    fn call(&mut self, x: &CVec) -> Result<CVec> {
        self.op.apply(x.as_slice(), &mut self.buf)?;
        self.count += 1;
        Ok(CVec::from_column_slice(&self.buf))
    }
}

pub(crate) fn krylov_schur<A: LinearOperator + ?Sized>(
    op: &A,
    n_eigs: usize,
    config: &KrylovConfig,
    want_vectors: bool,
) -> Result<KrylovOutput> {
    let n = op.dim();
    let m = config.subspace_dim(n_eigs).min(n);
    if n_eigs == 0 || n_eigs >= m {
        return Err(Error::InvalidParameter(format!(
            "need 0 < n_eigs < subspace dimension ({n_eigs} vs {m})"
        )));
    }
    let mut apply = Apply {
        op,
        buf: vec![Complex64::new(0.0, 0.0); n],
        count: 0,
    };

    let mut basis: Vec<CVec> = Vec::with_capacity(m + 1);
    let start = random_vector(n, config.seed, 0);
    basis.push(&start / Complex64::from(start.norm()));
    // (m + 1) x m projected matrix; rows 0..k hold the kept Schur block
    let mut h = CMat::zeros(m + 1, m);
    let mut kept = 0;
    let mut fresh_stream = 1;
    let mut last_residual = f64::INFINITY;
    let mut last_converged = 0;

    for restart in 0..=config.max_restarts {
        for j in kept..m {
            let mut w = apply.call(&basis[j])?;
            let coeffs = orthogonalize(&basis[..=j], &mut w);
            for (i, c) in coeffs.into_iter().enumerate() {
                h[(i, j)] = c;
            }
            let mut beta = w.norm();
            let scale = h.column(j).norm().max(1.0);
            if beta <= 1e-13 * scale {
                // invariant subspace: continue from a fresh orthogonal direction
                let mut r = random_vector(n, config.seed, fresh_stream);
                fresh_stream += 1;
                orthogonalize(&basis[..=j], &mut r);
                w = r;
                beta = 0.0;
            }
            h[(j + 1, j)] = Complex64::from(beta);
            let norm = w.norm();
            basis.truncate(j + 1);
            basis.push(w / Complex64::from(norm));
        }

        let (mut q, mut t) = complex_schur(h.rows(0, m).into_owned())?;
        sort_schur(&mut t, &mut q);
        // A V = V H + v_m b^T with b = row m of h, so the Ritz pair
        // (t_ii, V Q y) has residual |b^T Q y|
        let b: Vec<Complex64> = (0..m).map(|c| h[(m, c)]).collect();
        let bq: Vec<Complex64> = (0..m)
            .map(|c| (0..m).map(|r| b[r] * q[(r, c)]).sum())
            .collect();
        let ys: Vec<Vec<Complex64>> = (0..n_eigs).map(|i| triangular_eigenvector(&t, i)).collect();
        let residuals: Vec<f64> = ys
            .iter()
            .map(|y| {
                y.iter()
                    .zip(&bq)
                    .map(|(a, b)| a * b)
                    .sum::<Complex64>()
                    .norm()
            })
            .collect();
        let worst = residuals.iter().copied().fold(0.0, f64::max);
        last_residual = worst;
        let tol = |i: usize| config.tol * t[(i, i)].norm().max(1.0);
        let converged = residuals
            .iter()
            .enumerate()
            .filter(|(i, r)| **r <= tol(*i))
            .count();
        last_converged = converged;

        if converged == n_eigs {
            let vectors = want_vectors.then(|| {
                ys.iter()
                    .map(|y| {
                        let s = &q * DVector::from_column_slice(y);
                        let mut x = CVec::zeros(n);
                        for (k, c) in s.iter().enumerate() {
                            x.axpy(*c, &basis[k], Complex64::new(1.0, 0.0));
                        }
                        let norm = x.norm();
                        (x / Complex64::from(norm)).data.as_vec().clone()
                    })
                    .collect()
            });
            return Ok(KrylovOutput {
                eigenvalues: (0..n_eigs).map(|i| t[(i, i)]).collect(),
                residual_estimates: residuals,
                vectors,
                restarts: restart,
                matvecs: apply.count,
            });
        }

        // keep a block larger than the wanted set; avoid splitting a
        // conjugate-looking pair across the cut when cheap
        let mut k = ((n_eigs + m) / 2).max(n_eigs + 1).min(m - 1);
        if (t[(k - 1, k - 1)].norm() - t[(k, k)].norm()).abs() < 1e-12 && k + 1 < m {
            k += 1;
        }
        let mut new_basis = Vec::with_capacity(m + 1);
        for c in 0..k {
            let mut x = CVec::zeros(n);
            for r in 0..m {
                x.axpy(q[(r, c)], &basis[r], Complex64::new(1.0, 0.0));
            }
            new_basis.push(x);
        }
        new_basis.push(basis[m].clone());
        basis = new_basis;
        let mut nh = CMat::zeros(m + 1, m);
        for c in 0..k {
            for r in 0..=c {
                nh[(r, c)] = t[(r, c)];
            }
            nh[(k, c)] = bq[c];
        }
        h = nh;
        kept = k;
    }
    Err(Error::KrylovNotConverged {
        requested: n_eigs,
        converged: last_converged,
        residual: last_residual,
    })
}
