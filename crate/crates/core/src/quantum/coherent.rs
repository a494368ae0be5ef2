use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{CMat, HilbertSpace, QuantumState, ONE, ZERO};
use crate::error::{Error, Result};

/// Gaussian wavepacket centred at `(q0, p0)` with position variance `hbar/2`:
/// momentum amplitudes proportional to `exp(-hbar (n - n0)^2 / 2 - i q0 n)`,
/// `n0 = p0 / hbar`.
pub fn coherent_state(q0: f64, p0: f64, space: &HilbertSpace) -> Result<QuantumState> {
    let hbar = space.hbar_eff();
    let half_window = space.dim() as f64 * hbar / 2.0;
    if !(p0.abs() < half_window) || !q0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "centre ({q0}, {p0}) outside the momentum window +-{half_window}"
        )));
    }
    let n0 = p0 / hbar;
    let amplitudes: Vec<Complex64> = (0..space.dim())
        .map(|i| {
            let n = space.momentum(i) as f64;
            Complex64::from_polar((-0.5 * hbar * (n - n0).powi(2)).exp(), -q0 * n)
        })
        .collect();
    let tail = truncated_tail(n0, hbar, space);
    if tail > 1e-10 {
        return Err(Error::CoherentStateTruncated { tail });
    }
    Ok(QuantumState { amplitudes }.normalized())
}

/// Fraction of the untruncated packet's weight `exp(-hbar (n - n0)^2)` lying
/// outside the basis.
fn truncated_tail(n0: f64, hbar: f64, space: &HilbertSpace) -> f64 {
    let lo = space.momentum(0);
    let hi = space.momentum(space.dim() - 1);
    // beyond this distance the weight underflows
    let reach = (745.0 / hbar).sqrt().ceil() as i64 + 1;
    let start = (n0.floor() as i64 - reach).min(lo);
    let end = (n0.ceil() as i64 + reach).max(hi);
    let (mut inside, mut outside) = (0.0, 0.0);
    for n in start..=end {
        let w = (-hbar * (n as f64 - n0).powi(2)).exp();
        if n < lo || n > hi {
            outside += w;
        } else {
            inside += w;
        }
    }
    outside / (inside + outside)
}

/// Shift `e^{i m Q}`: `|n> -> |n + m>`, with columns that would leave the
/// basis set to zero.
pub fn shift_operator(space: &HilbertSpace, m: i64) -> CMat {
    let n = space.dim();
    let mut a = CMat::zeros(n, n);
    for c in 0..n {
        if let Some(r) = space.index_of(space.momentum(c) + m) {
            a[(r, c)] = ONE;
        }
    }
    a
}

/// The OTOC operator pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Observables {
    /// `A = e^{iQ}`.
    pub shift: CMat,
    /// `P = hbar n`.
    pub momentum: CMat,
}

pub fn build_observables(space: &HilbertSpace) -> Observables {
    let n = space.dim();
    let mut momentum = CMat::from_element(n, n, ZERO);
    for i in 0..n {
        momentum[(i, i)] = Complex64::new(space.hbar_eff() * space.momentum(i) as f64, 0.0);
    }
    Observables {
        shift: shift_operator(space, 1),
        momentum,
    }
}

/// Circular mean position `arg <e^{iQ}>` in `[0, 2pi)`.
pub fn mean_position(psi: &QuantumState, space: &HilbertSpace) -> f64 {
    psi.expectation(&shift_operator(space, 1))
        .arg()
        .rem_euclid(TAU)
}
