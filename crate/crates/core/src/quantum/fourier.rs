//! Unitary change of basis between momentum amplitudes and position samples.
//!
//! With `n = i - N/2`, `psi(q_j) = N^{-1/2} sum_n c_n e^{i n q_j}`, which is
//! an unnormalized inverse DFT followed by the sign pattern `(-1)^j`.

use num_complex::Complex64;

use super::{CMat, HilbertSpace};

impl HilbertSpace {
    fn sign_and_scale(&self, data: &mut [Complex64]) {
        let n = self.dim();
        let scale = 1.0 / (n as f64).sqrt();
        for col in data.chunks_exact_mut(n) {
            for (j, v) in col.iter_mut().enumerate() {
                *v *= if j % 2 == 0 { scale } else { -scale };
            }
        }
    }

    /// Momentum amplitudes to position samples, for each length-`N` chunk of `data`.
    pub fn to_position_chunks(&self, data: &mut [Complex64]) {
        self.ifft.process(data);
        self.sign_and_scale(data);
    }

    /// Inverse of [`to_position_chunks`](Self::to_position_chunks).
    pub fn to_momentum_chunks(&self, data: &mut [Complex64]) {
        self.sign_and_scale(data);
        self.fft.process(data);
    }

    /// `F M F^dagger`: a momentum-basis matrix expressed on the position grid.
    pub fn matrix_to_position(&self, m: &CMat) -> CMat {
        let mut a = m.clone();
        self.to_position_chunks(a.as_mut_slice());
        let mut b = a.adjoint();
        self.to_position_chunks(b.as_mut_slice());
        b.adjoint()
    }

    /// `F^dagger X F`: inverse of [`matrix_to_position`](Self::matrix_to_position).
    pub fn matrix_to_momentum(&self, x: &CMat) -> CMat {
        let mut a = x.clone();
        self.to_momentum_chunks(a.as_mut_slice());
        let mut b = a.adjoint();
        self.to_momentum_chunks(b.as_mut_slice());
        b.adjoint()
    }
}
