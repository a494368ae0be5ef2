use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::TimeSeries;
use crate::error::{Error, Result};
use crate::params::MapParams;
use crate::quantum::{
    build_observables, edge_population, shift_operator, HilbertSpace, PeriodMap, PropagatorConfig,
    QuantumState,
};

/// What to do when the state reaches the edge of the momentum basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeakagePolicy {
    /// Fail with a boundary-leakage error.
    Error,
    /// Keep going; the largest edge population is stored on the series.
    Record,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OtocConfig {
    pub propagator: PropagatorConfig,
    /// `A = e^{i m Q}`.
    pub shift: i64,
    pub leakage: LeakagePolicy,
}

impl Default for OtocConfig {
    fn default() -> Self {
        Self {
            propagator: PropagatorConfig::default(),
            shift: 1,
            leakage: LeakagePolicy::Error,
        }
    }
}

/// `C(t) = <psi0| [A, B(t)] [A, B(t)]^dag |psi0>` for `t = 0..=horizon`, with
/// `B(0) = P` evolved by the Heisenberg period map.
///
/// The adjoint map fixes the identity, and the identity commutes with `A`,
/// so the multiple of the identity in `B(t)` is removed after every step.
/// This keeps relative precision once `B(t)` has relaxed to near `c I`.
/// The Schrödinger image of `psi0` is carried along to watch the basis edge.
pub fn otoc_series(
    psi0: &QuantumState,
    space: &HilbertSpace,
    params: &MapParams,
    config: &OtocConfig,
    horizon: u64,
) -> Result<TimeSeries> {
    if horizon < 1 {
        return Err(Error::InvalidParameter("horizon must be >= 1".into()));
    }
    if psi0.amplitudes.len() != space.dim() {
        return Err(Error::InvalidParameter(
            "state dimension differs from N".into(),
        ));
    }
    if (psi0.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "state norm {} != 1",
            psi0.norm()
        )));
    }
    if config.shift == 0 {
        return Err(Error::InvalidParameter("shift must be nonzero".into()));
    }
    let map = PeriodMap::new(space, params, &config.propagator)?;
    let a_dag = shift_operator(space, config.shift).adjoint();
    let mut b = build_observables(space).momentum;
    let psi = DVector::from_column_slice(&psi0.amplitudes);
    let a_dag_psi = &a_dag * &psi;
    let mut rho = psi0.density_matrix().0;

    let levels = config.propagator.leakage_levels;
    let mut max_edge = edge_population(&rho, levels);
    let mut values = Vec::with_capacity(horizon as usize + 1);
    for t in 0..=horizon {
        // M^dag = B^dag A^dag - A^dag B^dag
        let b_dag = b.adjoint();
        let v: DVector<Complex64> = &b_dag * &a_dag_psi - &a_dag * (&b_dag * &psi);
        values.push(v.norm_squared());
        if t == horizon {
            break;
        }
        b = map.apply_adjoint(&b)?;
        let mean = b.trace() / Complex64::from(space.dim() as f64);
        for i in 0..space.dim() {
            b[(i, i)] -= mean;
        }
        rho = map.apply_channel(&rho)?;
        let edge = edge_population(&rho, levels);
        max_edge = max_edge.max(edge);
        if config.leakage == LeakagePolicy::Error && edge > config.propagator.leakage_tol {
            return Err(Error::BoundaryLeakage {
                population: edge,
                levels,
            });
        }
    }
    Ok(TimeSeries {
        times: (0..=horizon).collect(),
        values,
        params: *params,
        dim: space.dim(),
        hbar_eff: space.hbar_eff(),
        max_edge_population: max_edge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::standard_initial_state;
    use crate::quantum::coherent_state;

    fn setup(n: usize, hbar: f64, k: f64, gamma: f64) -> (HilbertSpace, MapParams) {
        let space = HilbertSpace::new(n, hbar).unwrap();
        let p = MapParams::default()
            .with_kick(k)
            .with_gamma(gamma)
            .with_hbar(hbar);
        (space, p)
    }

    #[test]
    fn initial_value_is_hbar_squared() {
        for &(k, g) in &[(5.4, 0.2), (1.1, 0.7)] {
            let (space, p) = setup(128, 0.15, k, g);
            let psi = standard_initial_state(&space).unwrap();
            let cfg = OtocConfig {
                leakage: LeakagePolicy::Record,
                ..Default::default()
            };
            let s = otoc_series(&psi, &space, &p, &cfg, 1).unwrap();
            assert!(
                (s.values[0] - 0.15f64.powi(2)).abs() < 1e-8,
                "{}",
                s.values[0]
            );
        }
    }

    #[test]
    fn free_unitary_limit_is_constant() {
        let (space, p) = setup(64, 0.25, 0.0, 1.0);
        let psi = coherent_state(1.0, 0.5, &space).unwrap();
        let s = otoc_series(&psi, &space, &p, &OtocConfig::default(), 20).unwrap();
        for v in &s.values {
            assert!((v - 0.0625).abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn decays_under_dissipation() {
        let (space, p) = setup(128, 0.15, 5.4, 0.2);
        let psi = standard_initial_state(&space).unwrap();
        let cfg = OtocConfig {
            leakage: LeakagePolicy::Record,
            ..Default::default()
        };
        let s = otoc_series(&psi, &space, &p, &cfg, 30).unwrap();
        s.validate().unwrap();
        assert!(s.values.iter().all(|v| *v >= 0.0));
        assert!(s.values[30] < 1e-3 * s.values[1]);
    }

    #[test]
    fn global_phase_does_not_change_series() {
        let (space, p) = setup(64, 0.25, 3.0, 0.3);
        let psi = standard_initial_state(&space).unwrap();
        let phase = Complex64::from_polar(1.0, 0.7);
        let rotated = QuantumState {
            amplitudes: psi.amplitudes.iter().map(|a| a * phase).collect(),
        };
        let cfg = OtocConfig {
            leakage: LeakagePolicy::Record,
            ..Default::default()
        };
        let a = otoc_series(&psi, &space, &p, &cfg, 10).unwrap();
        let b = otoc_series(&rotated, &space, &p, &cfg, 10).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300), "{x} {y}");
        }
    }

    #[test]
    fn leakage_policy_error_fires() {
        // strong kick with a window too small for the attractor
        let (space, p) = setup(64, 0.2, 8.0, 0.2);
        let psi = standard_initial_state(&space).unwrap();
        let r = otoc_series(&psi, &space, &p, &OtocConfig::default(), 20);
        assert!(matches!(r, Err(Error::BoundaryLeakage { .. })), "{r:?}");
        let cfg = OtocConfig {
            leakage: LeakagePolicy::Record,
            ..Default::default()
        };
        let s = otoc_series(&psi, &space, &p, &cfg, 20).unwrap();
        assert!(s.max_edge_population > 1e-8);
    }
}
