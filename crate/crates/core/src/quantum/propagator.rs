//! One kick period of the open quantum map, in either picture.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::dissipator::{dissipator_apply, dissipator_rk4, DissipatorScheme};
use super::{CMat, DensityMatrix, HilbertSpace, Operator, QuantumState};
use crate::error::{Error, Result};
use crate::params::MapParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Picture {
    Schrodinger,
    Heisenberg,
}

/// Composition of one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    /// Dissipator over unit time, then the kick, then free rotation.
    SplitDkr,
    /// Kick, then kinetic and dissipative terms integrated together.
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagatorConfig {
    pub ordering: Ordering,
    pub scheme: DissipatorScheme,
    /// RK4 steps per unit time when an integrator is used.
    pub substeps: usize,
    pub trace_tol: f64,
    pub leakage_levels: usize,
    pub leakage_tol: f64,
}

impl Default for PropagatorConfig {
    fn default() -> Self {
        Self {
            ordering: Ordering::SplitDkr,
            scheme: DissipatorScheme::Exact,
            substeps: 64,
            trace_tol: 1e-9,
            leakage_levels: 5,
            leakage_tol: 1e-8,
        }
    }
}

impl PropagatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.substeps == 0 {
            return Err(Error::InvalidParameter("substeps must be >= 1".into()));
        }
        if self.ordering == Ordering::Joint && self.scheme == DissipatorScheme::Exact {
            return Err(Error::InvalidParameter(
                "joint ordering has no closed form; use the rk4 scheme".into(),
            ));
        }
        Ok(())
    }
}

/// Diagonal factors of the two unitaries of one period.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagators {
    /// `exp(-i k [cos q + (a/2) cos(2q + phi)])` on the position grid.
    pub kick: Vec<Complex64>,
    /// `exp(-i hbar n^2 / 2)` on the momentum basis.
    pub free: Vec<Complex64>,
}

pub fn build_period_propagators(space: &HilbertSpace, params: &MapParams) -> Propagators {
    let k = params.quantum_kick();
    let kick = (0..space.dim())
        .map(|j| Complex64::from_polar(1.0, -k * params.potential(space.position(j))))
        .collect();
    let free = (0..space.dim())
        .map(|i| {
            let n = space.momentum(i) as f64;
            Complex64::from_polar(1.0, -0.5 * space.hbar_eff() * n * n)
        })
        .collect();
    Propagators { kick, free }
}

/// Population within `levels` of either end of the momentum basis.
pub fn edge_population(rho: &CMat, levels: usize) -> f64 {
    let n = rho.nrows();
    let levels = levels.min(n / 2);
    (0..levels)
        .map(|i| rho[(i, i)].re + rho[(n - 1 - i, n - 1 - i)].re)
        .sum()
}

/// Precomputed one-period evolution for fixed parameters.
#[derive(Debug, Clone)]
pub struct PeriodMap {
    space: HilbertSpace,
    params: MapParams,
    config: PropagatorConfig,
    props: Propagators,
}

impl PeriodMap {
    pub fn new(
        space: &HilbertSpace,
        params: &MapParams,
        config: &PropagatorConfig,
    ) -> Result<Self> {
        params.validate()?;
        config.validate()?;
        if (space.hbar_eff() - params.hbar_eff).abs() > 1e-15 * params.hbar_eff {
            return Err(Error::InvalidParameter(
                "Hilbert space and parameters disagree on hbar_eff".into(),
            ));
        }
        if params.gamma <= 0.0 {
            return Err(Error::InvalidParameter(
                "quantum map needs gamma > 0".into(),
            ));
        }
        Ok(Self {
            space: space.clone(),
            params: *params,
            config: *config,
            props: build_period_propagators(space, params),
        })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn params(&self) -> &MapParams {
        &self.params
    }

    pub fn config(&self) -> &PropagatorConfig {
        &self.config
    }

    pub fn propagators(&self) -> &Propagators {
        &self.props
    }

    /// `U X U^dagger` (Schrödinger) or `U^dagger X U` (Heisenberg) for the kick.
    pub fn kick_conjugate(&self, x: &CMat, picture: Picture) -> CMat {
        let mut pos = self.space.matrix_to_position(x);
        let d = &self.props.kick;
        let n = self.space.dim();
        for c in 0..n {
            for r in 0..n {
                let f = match picture {
                    Picture::Schrodinger => d[r] * d[c].conj(),
                    Picture::Heisenberg => d[r].conj() * d[c],
                };
                pos[(r, c)] *= f;
            }
        }
        self.space.matrix_to_momentum(&pos)
    }

    /// Conjugation by the free rotation, diagonal in momentum.
    pub fn free_conjugate(&self, x: &CMat, picture: Picture) -> CMat {
        let d = &self.props.free;
        CMat::from_fn(x.nrows(), x.ncols(), |r, c| {
            let f = match picture {
                Picture::Schrodinger => d[r] * d[c].conj(),
                Picture::Heisenberg => d[r].conj() * d[c],
            };
            x[(r, c)] * f
        })
    }

    fn dissipate(&self, x: &CMat, picture: Picture, kinetic: bool) -> Result<CMat> {
        match (self.config.scheme, kinetic) {
            (DissipatorScheme::Exact, false) => {
                dissipator_apply(x, picture, &self.space, self.params.gamma)
            }
            _ => dissipator_rk4(
                x,
                picture,
                &self.space,
                self.params.gamma,
                self.config.substeps,
                kinetic,
            ),
        }
    }

    /// One period applied to an arbitrary matrix, Schrödinger picture, no checks.
    pub fn apply_channel(&self, rho: &CMat) -> Result<CMat> {
        match self.config.ordering {
            Ordering::SplitDkr => {
                let x = self.dissipate(rho, Picture::Schrodinger, false)?;
                let x = self.kick_conjugate(&x, Picture::Schrodinger);
                Ok(self.free_conjugate(&x, Picture::Schrodinger))
            }
            Ordering::Joint => {
                let x = self.kick_conjugate(rho, Picture::Schrodinger);
                self.dissipate(&x, Picture::Schrodinger, true)
            }
        }
    }

    /// One period of the adjoint map applied to an arbitrary matrix.
    pub fn apply_adjoint(&self, b: &CMat) -> Result<CMat> {
        match self.config.ordering {
            Ordering::SplitDkr => {
                let x = self.free_conjugate(b, Picture::Heisenberg);
                let x = self.kick_conjugate(&x, Picture::Heisenberg);
                self.dissipate(&x, Picture::Heisenberg, false)
            }
            Ordering::Joint => {
                let x = self.dissipate(b, Picture::Heisenberg, true)?;
                Ok(self.kick_conjugate(&x, Picture::Heisenberg))
            }
        }
    }

    /// One period of a density matrix, with trace-drift and boundary checks.
    pub fn schrodinger(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let out = self.apply_channel(&rho.0)?;
        let drift = (out.trace() - rho.0.trace()).norm();
        if drift > self.config.trace_tol {
            return Err(Error::TraceDrift { drift });
        }
        self.check_leakage(&out)?;
        Ok(DensityMatrix(out))
    }

    pub fn check_leakage(&self, rho: &CMat) -> Result<()> {
        let population = edge_population(rho, self.config.leakage_levels);
        if population > self.config.leakage_tol {
            return Err(Error::BoundaryLeakage {
                population,
                levels: self.config.leakage_levels,
            });
        }
        Ok(())
    }

    /// One period of a Heisenberg-picture operator.
    pub fn heisenberg(&self, b: &Operator) -> Result<Operator> {
        Ok(Operator(self.apply_adjoint(&b.0)?))
    }

    /// Unitary part of one period applied to a pure state: kick, then free rotation.
    pub fn unitary_step(&self, psi: &QuantumState) -> QuantumState {
        let mut v = psi.amplitudes.clone();
        self.space.to_position_chunks(&mut v);
        v.iter_mut()
            .zip(&self.props.kick)
            .for_each(|(a, d)| *a *= d);
        self.space.to_momentum_chunks(&mut v);
        v.iter_mut()
            .zip(&self.props.free)
            .for_each(|(a, d)| *a *= d);
        QuantumState { amplitudes: v }
    }

    /// Dense unitary of one period without dissipation, momentum basis.
    pub fn unitary_matrix(&self) -> CMat {
        let n = self.space.dim();
        let kick =
            self.space
                .matrix_to_momentum(&CMat::from_diagonal(&nalgebra::DVector::from_vec(
                    self.props.kick.clone(),
                )));
        let free = CMat::from_diagonal(&nalgebra::DVector::from_vec(self.props.free.clone()));
        debug_assert_eq!(kick.nrows(), n);
        free * kick
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::max_abs;
    use crate::quantum::{build_observables, coherent_state, trace_product};

    fn params(kick: f64, gamma: f64, hbar: f64) -> MapParams {
        MapParams::default()
            .with_kick(kick)
            .with_gamma(gamma)
            .with_hbar(hbar)
    }

    fn random_density(n: usize, seed: u64) -> CMat {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(seed, 0);
        let a = CMat::from_fn(n, n, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let rho = &a * a.adjoint();
        let t = rho.trace();
        rho / t
    }

    #[test]
    fn zero_kick_is_identity_and_factors_are_unitary() {
        let s = HilbertSpace::new(64, 0.25).unwrap();
        let p = params(0.0, 0.5, 0.25);
        let props = build_period_propagators(&s, &p);
        assert!(props
            .kick
            .iter()
            .all(|d| (d - Complex64::from(1.0)).norm() < 1e-15));
        let p = params(3.0, 0.5, 0.25);
        let map = PeriodMap::new(&s, &p, &PropagatorConfig::default()).unwrap();
        let u = map.unitary_matrix();
        let err = max_abs(&(u.adjoint() * &u - CMat::identity(64, 64)));
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn duality_between_pictures() {
        let s = HilbertSpace::new(64, 0.2).unwrap();
        let map = PeriodMap::new(&s, &params(5.4, 0.2, 0.2), &PropagatorConfig::default()).unwrap();
        let rho = random_density(64, 1);
        let b = random_density(64, 2) * Complex64::new(3.0, 0.0);
        let lhs = trace_product(&b, &map.apply_channel(&rho).unwrap());
        let rhs = trace_product(&map.apply_adjoint(&b).unwrap(), &rho);
        assert!((lhs - rhs).norm() < 1e-8);
    }

    #[test]
    fn heisenberg_of_momentum_in_unitary_limit() {
        let s = HilbertSpace::new(64, 0.2).unwrap();
        let map = PeriodMap::new(&s, &params(2.0, 1.0, 0.2), &PropagatorConfig::default()).unwrap();
        let obs = build_observables(&s);
        let u = map.unitary_matrix();
        let expected = u.adjoint() * &obs.momentum * &u;
        let got = map.heisenberg(&Operator(obs.momentum.clone())).unwrap();
        assert!(max_abs(&(got.0 - expected)) < 1e-9);
    }

    #[test]
    fn unit_gamma_conserves_purity() {
        let s = HilbertSpace::new(128, 0.1).unwrap();
        let map = PeriodMap::new(&s, &params(1.5, 1.0, 0.1), &PropagatorConfig::default()).unwrap();
        let mut rho = coherent_state(3.0, 0.0, &s).unwrap().density_matrix();
        for _ in 0..5 {
            rho = DensityMatrix(map.apply_channel(&rho.0).unwrap());
        }
        assert!((rho.purity() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_kick_contracts_mean_momentum() {
        let s = HilbertSpace::new(128, 0.1).unwrap();
        let map = PeriodMap::new(&s, &params(0.0, 0.5, 0.1), &PropagatorConfig::default()).unwrap();
        let mut rho = coherent_state(1.0, 2.0, &s).unwrap().density_matrix();
        let n0 = rho.mean_momentum_number(&s);
        for t in 1..=6 {
            rho = map.schrodinger(&rho).unwrap();
            assert!((rho.mean_momentum_number(&s) - 0.5f64.powi(t) * n0).abs() < 1e-5);
        }
    }

    #[test]
    fn orderings_agree_in_limits() {
        let s = HilbertSpace::new(32, 0.4).unwrap();
        let joint = PropagatorConfig {
            ordering: Ordering::Joint,
            scheme: DissipatorScheme::Rk4,
            substeps: 3000,
            ..Default::default()
        };
        let rho = coherent_state(2.0, 1.2, &s).unwrap().density_matrix();
        // unitary limit: both are the kicked rotator unitary
        let p = params(1.0, 1.0, 0.4);
        let a = PeriodMap::new(&s, &p, &PropagatorConfig::default())
            .unwrap()
            .apply_channel(&rho.0)
            .unwrap();
        let b = PeriodMap::new(&s, &p, &joint)
            .unwrap()
            .apply_channel(&rho.0)
            .unwrap();
        assert!(max_abs(&(a - b)) < 1e-8);
        // no kick: populations only feel the dissipator
        let p = params(0.0, 0.3, 0.4);
        let a = DensityMatrix(
            PeriodMap::new(&s, &p, &PropagatorConfig::default())
                .unwrap()
                .apply_channel(&rho.0)
                .unwrap(),
        );
        let b = DensityMatrix(
            PeriodMap::new(&s, &p, &joint)
                .unwrap()
                .apply_channel(&rho.0)
                .unwrap(),
        );
        for (x, y) in a.populations().iter().zip(b.populations()) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn exact_and_rk4_schemes_agree() {
        let s = HilbertSpace::new(32, 0.4).unwrap();
        let p = params(2.0, 0.2, 0.4);
        let rk = PropagatorConfig {
            scheme: DissipatorScheme::Rk4,
            substeps: 256,
            ..Default::default()
        };
        let rho = random_density(32, 8);
        let a = PeriodMap::new(&s, &p, &PropagatorConfig::default())
            .unwrap()
            .apply_channel(&rho)
            .unwrap();
        let b = PeriodMap::new(&s, &p, &rk)
            .unwrap()
            .apply_channel(&rho)
            .unwrap();
        assert!(max_abs(&(a - b)) < 1e-9);
    }

    #[test]
    fn joint_needs_integrator() {
        let s = HilbertSpace::new(32, 0.4).unwrap();
        let cfg = PropagatorConfig {
            ordering: Ordering::Joint,
            ..Default::default()
        };
        assert!(PeriodMap::new(&s, &params(1.0, 0.5, 0.4), &cfg).is_err());
        assert!(PeriodMap::new(&s, &params(1.0, 0.5, 0.3), &PropagatorConfig::default()).is_err());
    }

    #[test]
    fn leakage_is_reported() {
        let s = HilbertSpace::new(32, 0.4).unwrap();
        let map = PeriodMap::new(&s, &params(0.0, 1.0, 0.4), &PropagatorConfig::default()).unwrap();
        let rho = QuantumState::momentum_state(&s, 15)
            .unwrap()
            .density_matrix();
        assert!(matches!(
            map.schrodinger(&rho),
            Err(Error::BoundaryLeakage { .. })
        ));
    }
}
