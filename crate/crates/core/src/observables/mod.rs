//! Quantities measured on the quantum map: the out-of-time-order
//! correlator, the inverse participation ratio, Husimi maps and the
//! invariant state.

mod equilibrium;
mod husimi;
mod otoc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::MapParams;
use crate::quantum::{coherent_state, DensityMatrix, HilbertSpace, QuantumState};

pub use equilibrium::{equilibrium_state, Equilibrium, EquilibriumConfig};
pub use husimi::{husimi, HusimiGrid, HusimiMap, HusimiNormalization, HusimiSource};
pub use otoc::{otoc_series, LeakagePolicy, OtocConfig};

/// Real observable sampled at integer kick counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<u64>,
    pub values: Vec<f64>,
    pub params: MapParams,
    pub dim: usize,
    pub hbar_eff: f64,
    /// Largest population seen within the edge levels of the basis.
    pub max_edge_population: f64,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.len() != self.values.len() {
            return Err(Error::InvalidParameter(
                "times and values differ in length".into(),
            ));
        }
        if self.times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "times must be strictly increasing".into(),
            ));
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!("non-finite value {v}")));
        }
        Ok(())
    }

    /// Value at kick `t`, if sampled.
    pub fn at(&self, t: u64) -> Option<f64> {
        self.times.binary_search(&t).ok().map(|i| self.values[i])
    }
}

/// Packet the observables start from: centred at `q = pi`, `p = 0`.
pub fn standard_initial_state(space: &HilbertSpace) -> Result<QuantumState> {
    coherent_state(std::f64::consts::PI, 0.0, space)
}

/// `(sum_i rho_ii^2)^-1 / N` over the momentum-basis populations.
pub fn ipr(rho: &DensityMatrix) -> f64 {
    let s: f64 = rho.populations().iter().map(|p| p * p).sum();
    1.0 / (s * rho.dim() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::CMat;
    use num_complex::Complex64;

    #[test]
    fn ipr_limits() {
        let n = 16;
        assert!((ipr(&DensityMatrix::maximally_mixed(n)) - 1.0).abs() < 1e-14);
        let space = HilbertSpace::unchecked(n, 1.0);
        let pure = QuantumState::momentum_state(&space, 3)
            .unwrap()
            .density_matrix();
        assert!((ipr(&pure) - 1.0 / n as f64).abs() < 1e-14);
        let mut m = CMat::zeros(n, n);
        m[(2, 2)] = Complex64::from(0.5);
        m[(9, 9)] = Complex64::from(0.5);
        assert!((ipr(&DensityMatrix(m)) - 2.0 / n as f64).abs() < 1e-14);
    }

    #[test]
    fn series_validation() {
        let s = TimeSeries {
            times: vec![0, 2, 1],
            values: vec![1.0; 3],
            params: MapParams::default(),
            dim: 4,
            hbar_eff: 1.0,
            max_edge_population: 0.0,
        };
        assert!(s.validate().is_err());
    }
}
