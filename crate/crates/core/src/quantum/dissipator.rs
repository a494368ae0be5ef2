//! One unit of time under the Lindblad dissipator
//! `L1 = g sum_n sqrt(n+1) |n><n+1|`, `L2 = g sum_n sqrt(n+1) |-n><-n-1|`, `g^2 = -ln gamma`.
//!
//! Both ladders drive momentum toward zero. Over unit time each ladder acts
//! as a pure-loss channel of transmissivity `e^{-g^2} = gamma`, so the map
//! has a closed form:
//!
//! `rho'_{nm} = sum_k sqrt(C(n+k,k) C(m+k,k)) (1-gamma)^k gamma^{(n+m)/2} rho_{n+k,m+k}`
//!
//! on the `n, m >= 0` block (mirrored for `n, m <= 0`); coherences between
//! opposite-sign momenta only decay. The fixed-step RK4 integration of the
//! generator is kept for cross-checks and for joint kinetic + dissipative
//! evolution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CMat, HilbertSpace, Picture, ZERO};
use crate::error::{Error, Result};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DissipatorScheme {
    /// Closed-form solution over unit time.
    Exact,
    /// Fixed-step fourth-order Runge-Kutta on the banded generator.
    Rk4,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "quantum dissipation needs gamma in (0, 1], got {gamma}"
        )));
    }
    Ok(())
}

fn ln_table(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| {
            if i == 0 {
                f64::NEG_INFINITY
            } else {
                (i as f64).ln()
            }
        })
        .collect()
}

/// Applies the unit-time dissipator (Schrödinger) or its adjoint (Heisenberg)
/// in closed form.
pub fn dissipator_apply(
    x: &CMat,
    picture: Picture,
    space: &HilbertSpace,
    gamma: f64,
) -> Result<CMat> {
    check_gamma(gamma)?;
    if gamma == 1.0 {
        return Ok(x.clone());
    }
    let n = space.dim();
    let half = (n / 2) as i64;
    let ln_eta = gamma.ln();
    let ln_loss = (1.0 - gamma).ln();
    let ln = ln_table(n + 2);
    let mut out = CMat::zeros(n, n);
    out.as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(c, col)| {
            let nc = c as i64 - half;
            for (r, slot) in col.iter_mut().enumerate() {
                let nr = r as i64 - half;
                let mut acc = ZERO;
                if nr >= 0 && nc >= 0 {
                    acc += chain(
                        x,
                        picture,
                        r,
                        c,
                        1,
                        nr as usize,
                        nc as usize,
                        ln_eta,
                        ln_loss,
                        &ln,
                        true,
                    );
                }
                if nr <= 0 && nc <= 0 {
                    let first = !(nr == 0 && nc == 0);
                    acc += chain(
                        x,
                        picture,
                        r,
                        c,
                        -1,
                        (-nr) as usize,
                        (-nc) as usize,
                        ln_eta,
                        ln_loss,
                        &ln,
                        first,
                    );
                }
                if (nr > 0 && nc < 0) || (nr < 0 && nc > 0) {
                    let decay =
                        (0.5 * (nr.unsigned_abs() + nc.unsigned_abs()) as f64 * ln_eta).exp();
                    acc = x[(r, c)] * decay;
                }
                *slot = acc;
            }
        });
    Ok(out)
}

/// Sum along one ladder for target `(r, c)` with momentum magnitudes `(a, b)`.
/// `dir` is the index step that moves away from zero momentum.
#[allow(clippy::too_many_arguments)]
#[inline]
fn chain(
    x: &CMat,
    picture: Picture,
    r: usize,
    c: usize,
    dir: i64,
    a: usize,
    b: usize,
    ln_eta: f64,
    ln_loss: f64,
    ln: &[f64],
    include_diagonal: bool,
) -> Complex64 {
    let n = x.nrows() as i64;
    let mut acc = ZERO;
    let mut lw = 0.5 * (a + b) as f64 * ln_eta;
    if include_diagonal {
        acc += x[(r, c)] * lw.exp();
    }
    match picture {
        // sources sit further from zero: (a + k, b + k)
        Picture::Schrodinger => {
            let mut k = 1usize;
            loop {
                let rr = r as i64 + dir * k as i64;
                let cc = c as i64 + dir * k as i64;
                if rr < 0 || cc < 0 || rr >= n || cc >= n {
                    break;
                }
                lw += 0.5 * (ln[a + k] + ln[b + k]) - ln[k] + ln_loss;
                if lw > -745.0 {
                    acc += x[(rr as usize, cc as usize)] * lw.exp();
                }
                k += 1;
            }
        }
        // sources sit closer to zero: (a - k, b - k)
        Picture::Heisenberg => {
            for k in 1..=a.min(b) {
                let rr = (r as i64 - dir * k as i64) as usize;
                let cc = (c as i64 - dir * k as i64) as usize;
                lw += 0.5 * (ln[a - k + 1] + ln[b - k + 1]) - ln[k] + ln_loss - ln_eta;
                if lw > -745.0 {
                    acc += x[(rr, cc)] * lw.exp();
                }
            }
        }
    }
    acc
}

/// Time derivative under the dissipator (and optionally the kinetic term
/// `hbar n^2 / 2`) in the requested picture. The ladder terms only couple
/// `(n, m)` to `(n +- 1, m +- 1)`.
fn generator(x: &CMat, picture: Picture, space: &HilbertSpace, g2: f64, kinetic: bool) -> CMat {
    let n = space.dim();
    let hbar = space.hbar_eff();
    let energy = |k: i64| 0.5 * hbar * (k as f64).powi(2);
    CMat::from_fn(n, n, |r, c| {
        let (nr, nc) = (space.momentum(r), space.momentum(c));
        let mut d = x[(r, c)] * (-0.5 * g2 * (nr.unsigned_abs() + nc.unsigned_abs()) as f64);
        match picture {
            Picture::Schrodinger => {
                if kinetic {
                    d += x[(r, c)] * Complex64::new(0.0, -(energy(nr) - energy(nc)));
                }
                if nr >= 0 && nc >= 0 && r + 1 < n && c + 1 < n {
                    d += x[(r + 1, c + 1)] * (g2 * (((nr + 1) * (nc + 1)) as f64).sqrt());
                }
                if nr <= 0 && nc <= 0 && r >= 1 && c >= 1 {
                    d += x[(r - 1, c - 1)] * (g2 * (((1 - nr) * (1 - nc)) as f64).sqrt());
                }
            }
            Picture::Heisenberg => {
                if kinetic {
                    d += x[(r, c)] * Complex64::new(0.0, energy(nr) - energy(nc));
                }
                if nr >= 1 && nc >= 1 {
                    d += x[(r - 1, c - 1)] * (g2 * ((nr * nc) as f64).sqrt());
                }
                if nr <= -1 && nc <= -1 {
                    d += x[(r + 1, c + 1)] * (g2 * ((nr * nc) as f64).sqrt());
                }
            }
        }
        d
    })
}

/// Smallest RK4 substep count that keeps every mode of the generator inside
/// the stability region.
pub(crate) fn stable_substeps(space: &HilbertSpace, gamma: f64, kinetic: bool) -> usize {
    let half = (space.dim() / 2) as f64;
    let mut rate = -gamma.ln() * half;
    if kinetic {
        rate += 0.5 * space.hbar_eff() * half * half;
    }
    (rate / 2.5).ceil().max(1.0) as usize
}

/// Integrates the generator over unit time with `substeps` RK4 steps,
/// raised if needed to the stability minimum. Being linear, RK4 keeps the
/// trace (Schrödinger) and the identity (Heisenberg) exactly.
pub fn dissipator_rk4(
    x: &CMat,
    picture: Picture,
    space: &HilbertSpace,
    gamma: f64,
    substeps: usize,
    kinetic: bool,
) -> Result<CMat> {
    check_gamma(gamma)?;
    if substeps == 0 {
        return Err(Error::InvalidParameter("substeps must be >= 1".into()));
    }
    let g2 = -gamma.ln();
    let steps = substeps.max(stable_substeps(space, gamma, kinetic));
    let h = 1.0 / steps as f64;
    let f = |y: &CMat| generator(y, picture, space, g2, kinetic);
    let mut y = x.clone();
    for _ in 0..steps {
        let k1 = f(&y);
        let k2 = f(&(&y + &k1 * Complex64::from(0.5 * h)));
        let k3 = f(&(&y + &k2 * Complex64::from(0.5 * h)));
        let k4 = f(&(&y + &k3 * Complex64::from(h)));
        y += (k1 + (k2 + k3) * Complex64::from(2.0) + k4) * Complex64::from(h / 6.0);
    }
    Ok(y)
}
