//! The classical dissipative kicked rotator map, its tangent dynamics and
//! the derived Lyapunov and bifurcation diagnostics.

mod bifurcation;
mod lyapunov;

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::params::MapParams;

pub use bifurcation::{bifurcation_scan, count_clusters, BifurcationColumn, BifurcationConfig};
pub use lyapunov::{
    averaged_initial_condition, averaged_max_lyapunov, lyapunov_spectrum, max_lyapunov,
    LyapunovAverage, LyapunovConfig, TangentFrame,
};

/// A point `(q, p)` of phase space, `q` on the circle and `p` the scaled momentum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(q: f64, p: f64) -> Self {
        Self {
            q: wrap_angle(q),
            p,
        }
    }
}

/// Additive Gaussian momentum noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub enabled: bool,
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub const fn off() -> Self {
        Self {
            enabled: false,
            sigma: 0.0,
            seed: 0,
        }
    }

    /// Noise with standard deviation `hbar_eff`.
    pub fn hbar_sized(params: &MapParams, seed: u64) -> Self {
        Self {
            enabled: true,
            sigma: params.hbar_eff,
            seed,
        }
    }

    pub fn is_active(&self) -> bool {
        self.enabled && self.sigma > 0.0
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::off()
    }
}

/// Wraps an angle into `[0, 2pi)`.
#[inline]
pub fn wrap_angle(q: f64) -> f64 {
    let r = q.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Kick impulse per unit strength at angle `q`.
#[inline]
pub fn force(q: f64, params: &MapParams) -> f64 {
    params.force(q)
}

/// One period of the map: damping and kick, then drift with the new momentum.
#[inline]
pub fn map_step<R: Rng + ?Sized>(
    x: PhasePoint,
    params: &MapParams,
    noise: &NoiseSpec,
    rng: &mut R,
) -> PhasePoint {
    let mut p = params.gamma * x.p + params.kick * params.force(x.q);
    if noise.is_active() {
        let xi: f64 = rng.sample(StandardNormal);
        p += noise.sigma * xi;
    }
    PhasePoint {
        q: wrap_angle(x.q + p),
        p,
    }
}

/// Noiseless map step.
#[inline]
pub fn map_step_det(x: PhasePoint, params: &MapParams) -> PhasePoint {
    let p = params.gamma * x.p + params.kick * params.force(x.q);
    PhasePoint {
        q: wrap_angle(x.q + p),
        p,
    }
}

/// Tangent map at `x`, rows `(dq'/dq, dq'/dp)` and `(dp'/dq, dp'/dp)`.
#[inline]
pub fn jacobian(x: PhasePoint, params: &MapParams) -> [[f64; 2]; 2] {
    let kf = params.kick * params.force_derivative(x.q);
    [[1.0 + kf, params.gamma], [kf, params.gamma]]
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::rng::stream_rng;

    fn params(kick: f64, gamma: f64) -> MapParams {
        MapParams::default().with_kick(kick).with_gamma(gamma)
    }

    #[test]
    fn force_free_step() {
        let mut rng = stream_rng(0, 0);
        let x = map_step(
            PhasePoint::new(1.0, 1.0),
            &params(0.0, 0.2),
            &NoiseSpec::off(),
            &mut rng,
        );
        assert!((x.p - 0.2).abs() < 1e-15);
        assert!((x.q - 1.2).abs() < 1e-15);
    }

    #[test]
    fn kicked_step_matches_hand_value() {
        let x = map_step_det(PhasePoint::new(PI / 2.0, 1.0), &params(1.0, 0.2));
        assert!((x.p - 0.7).abs() < 1e-14);
        assert!((x.q - (PI / 2.0 + 0.7)).abs() < 1e-14);
    }

    #[test]
    fn conservative_free_rotation() {
        let x = map_step_det(PhasePoint::new(6.0, 1.5), &params(0.0, 1.0));
        assert_eq!(x.p, 1.5);
        assert!((x.q - (7.5 - TAU)).abs() < 1e-14);
    }

    #[test]
    fn jacobian_limits() {
        let j = jacobian(PhasePoint::new(0.3, 0.0), &params(0.0, 0.2));
        assert_eq!(j, [[1.0, 0.2], [0.0, 0.2]]);
        let j = jacobian(PhasePoint::new(0.3, 0.0), &params(0.0, 1.0));
        assert_eq!(j, [[1.0, 1.0], [0.0, 1.0]]);
    }

    #[test]
    fn noise_changes_momentum_only_when_enabled() {
        let p = params(2.0, 0.3);
        let x = PhasePoint::new(1.0, 0.5);
        let off = NoiseSpec {
            enabled: false,
            sigma: 1.0,
            seed: 3,
        };
        let a = map_step(x, &p, &off, &mut stream_rng(1, 0));
        let b = map_step(x, &p, &off, &mut stream_rng(2, 0));
        assert_eq!(a, b);
        let on = NoiseSpec::hbar_sized(&p.with_hbar(0.5), 3);
        let c = map_step(x, &p, &on, &mut stream_rng(1, 0));
        assert_ne!(a.p, c.p);
    }

    #[test]
    fn noise_has_requested_spread() {
        let p = params(0.0, 0.0);
        let noise = NoiseSpec {
            enabled: true,
            sigma: 0.15,
            seed: 0,
        };
        let mut rng = stream_rng(9, 0);
        let n = 200_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| map_step(PhasePoint::new(0.0, 0.0), &p, &noise, &mut rng).p)
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 3.0 * 0.15 / (n as f64).sqrt() * 2.0);
        assert!((var.sqrt() - 0.15).abs() < 0.002);
    }

    #[test]
    fn wrap_angle_edge_cases() {
        assert_eq!(wrap_angle(TAU), 0.0);
        assert_eq!(wrap_angle(0.0), 0.0);
        let w = wrap_angle(-1e-18);
        assert!((0.0..TAU).contains(&w));
    }

    proptest::proptest! {
        #[test]
        fn det_jacobian_is_gamma(q in 0.0..TAU, p in -10.0..10.0f64, k in 0.0..10.0f64, g in 0.0..=1.0f64) {
            let j = jacobian(PhasePoint::new(q, p), &params(k, g));
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            proptest::prop_assert!((det - g).abs() < 1e-12 * (1.0 + k));
        }

        #[test]
        fn step_keeps_angle_wrapped(q in 0.0..TAU, p in -1e3..1e3f64, k in 0.0..10.0f64, g in 0.0..=1.0f64) {
            let x = map_step_det(PhasePoint::new(q, p), &params(k, g));
            proptest::prop_assert!((0.0..TAU).contains(&x.q));
        }

        #[test]
        fn noiseless_step_is_deterministic(q in 0.0..TAU, p in -10.0..10.0f64, k in 0.0..10.0f64) {
            let pr = params(k, 0.2);
            let a = map_step(PhasePoint::new(q, p), &pr, &NoiseSpec::off(), &mut stream_rng(1, 2));
            let b = map_step(PhasePoint::new(q, p), &pr, &NoiseSpec::off(), &mut stream_rng(7, 9));
            proptest::prop_assert_eq!(a.q.to_bits(), b.q.to_bits());
            proptest::prop_assert_eq!(a.p.to_bits(), b.p.to_bits());
        }
    }
}
