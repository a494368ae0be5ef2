use serde::{Deserialize, Serialize};

use super::standard_initial_state;
use crate::error::{Error, Result};
use crate::params::MapParams;
use crate::quantum::{
    edge_population, trace_norm_hermitian, DensityMatrix, HilbertSpace, PeriodMap, PropagatorConfig,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumConfig {
    pub propagator: PropagatorConfig,
    /// Trace-norm distance between successive periods.
    pub tol: f64,
    pub t_max: usize,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        Self {
            propagator: PropagatorConfig::default(),
            tol: 1e-8,
            t_max: 5000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub state: DensityMatrix,
    /// `||rho_{t+1} - rho_t||_1` at the last step.
    pub residual: f64,
    pub iterations: usize,
    /// False when `t_max` was reached first.
    pub converged: bool,
    pub max_edge_population: f64,
}

/// Iterates the channel from the standard packet until successive states
/// agree to `tol` in trace norm.
pub fn equilibrium_state(
    space: &HilbertSpace,
    params: &MapParams,
    config: &EquilibriumConfig,
) -> Result<Equilibrium> {
    if !(params.gamma < 1.0) {
        return Err(Error::InvalidParameter(
            "the channel must be contracting (gamma < 1)".into(),
        ));
    }
    if !(config.tol > 0.0) || config.t_max == 0 {
        return Err(Error::InvalidParameter(
            "tol > 0 and t_max >= 1 required".into(),
        ));
    }
    let map = PeriodMap::new(space, params, &config.propagator)?;
    let levels = config.propagator.leakage_levels;
    let mut rho = standard_initial_state(space)?.density_matrix().0;
    let mut max_edge = edge_population(&rho, levels);
    let mut residual = f64::INFINITY;
    for t in 1..=config.t_max {
        let next = map.apply_channel(&rho)?;
        let diff = &next - &rho;
        rho = next;
        max_edge = max_edge.max(edge_population(&rho, levels));
        // ||X||_F <= ||X||_1, so the exact norm is only needed once this is small
        if diff.norm() < config.tol || t == config.t_max {
            residual = trace_norm_hermitian(&diff);
            if residual < config.tol {
                return Ok(Equilibrium {
                    state: DensityMatrix(rho),
                    residual,
                    iterations: t,
                    converged: true,
                    max_edge_population: max_edge,
                });
            }
        }
    }
    Ok(Equilibrium {
        state: DensityMatrix(rho),
        residual,
        iterations: config.t_max,
        converged: false,
        max_edge_population: max_edge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_kick_relaxes_to_ground_level() {
        let space = HilbertSpace::new(64, 0.25).unwrap();
        let p = MapParams::default().with_kick(0.0).with_hbar(0.25);
        let eq = equilibrium_state(&space, &p, &EquilibriumConfig::default()).unwrap();
        assert!(eq.converged);
        assert!(eq.state.mean_momentum_number(&space).abs() < 1e-3);
        assert!(eq.state.populations()[32] > 0.999);
    }

    #[test]
    fn result_is_a_fixed_point() {
        let space = HilbertSpace::new(64, 0.25).unwrap();
        let p = MapParams::default().with_kick(1.1).with_hbar(0.25);
        let cfg = EquilibriumConfig::default();
        let eq = equilibrium_state(&space, &p, &cfg).unwrap();
        assert!(eq.converged, "{}", eq.residual);
        let map = PeriodMap::new(&space, &p, &cfg.propagator).unwrap();
        let step = map.apply_channel(&eq.state.0).unwrap();
        assert!(trace_norm_hermitian(&(&step - &eq.state.0)) < cfg.tol);
    }

    #[test]
    fn flags_non_convergence() {
        let space = HilbertSpace::new(64, 0.25).unwrap();
        let p = MapParams::default().with_kick(5.4).with_hbar(0.25);
        let cfg = EquilibriumConfig {
            t_max: 3,
            ..Default::default()
        };
        let eq = equilibrium_state(&space, &p, &cfg).unwrap();
        assert!(!eq.converged);
        assert!(eq.residual > cfg.tol);
    }

    #[test]
    fn unitary_channel_rejected() {
        let space = HilbertSpace::new(64, 0.25).unwrap();
        let p = MapParams::default().with_gamma(1.0).with_hbar(0.25);
        assert!(equilibrium_state(&space, &p, &EquilibriumConfig::default()).is_err());
    }
}
