//! Physical parameters shared by the classical map and its quantization.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the dissipative modified kicked rotator.
///
/// `kick` is the scaled kick strength `K = hbar_eff * k`; the quantum side
/// works with the unscaled `k` returned by [`MapParams::quantum_kick`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapParams {
    pub kick: f64,
    pub gamma: f64,
    pub hbar_eff: f64,
    pub a: f64,
    pub phi: f64,
    /// Use coefficient 1 on the second harmonic of the force instead of `a`.
    #[serde(default)]
    pub force_literal: bool,
}

impl Default for MapParams {
    fn default() -> Self {
        Self {
            kick: 5.4,
            gamma: 0.2,
            hbar_eff: 0.031,
            a: 0.5,
            phi: PI / 2.0,
            force_literal: false,
        }
    }
}

impl MapParams {
    pub fn new(kick: f64, gamma: f64, hbar_eff: f64) -> Result<Self> {
        let p = Self {
            kick,
            gamma,
            hbar_eff,
            ..Self::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_kick(self, kick: f64) -> Self {
        Self { kick, ..self }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }

    pub fn with_hbar(self, hbar_eff: f64) -> Self {
        Self { hbar_eff, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::InvalidParameter(format!(
                "gamma = {} outside [0, 1]",
                self.gamma
            )));
        }
        if !(self.hbar_eff > 0.0) || !self.hbar_eff.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "hbar_eff = {} must be positive",
                self.hbar_eff
            )));
        }
        if !(self.kick >= 0.0) || !self.kick.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "K = {} must be non-negative",
                self.kick
            )));
        }
        if !self.a.is_finite() || !self.phi.is_finite() {
            return Err(Error::InvalidParameter("a and phi must be finite".into()));
        }
        Ok(())
    }

    /// Unscaled kick strength `k = K / hbar_eff`.
    pub fn quantum_kick(&self) -> f64 {
        self.kick / self.hbar_eff
    }

    /// Coefficient of `sin(2q + phi)` in the force.
    pub fn second_harmonic(&self) -> f64 {
        if self.force_literal {
            1.0
        } else {
            self.a
        }
    }

    /// Kick impulse per unit kick strength, `sin q + c sin(2q + phi)`.
    #[inline]
    pub fn force(&self, q: f64) -> f64 {
        q.sin() + self.second_harmonic() * (2.0 * q + self.phi).sin()
    }

    #[inline]
    pub fn force_derivative(&self, q: f64) -> f64 {
        q.cos() + 2.0 * self.second_harmonic() * (2.0 * q + self.phi).cos()
    }

    /// Potential per unit kick strength; its negative derivative is [`force`](Self::force).
    #[inline]
    pub fn potential(&self, q: f64) -> f64 {
        q.cos() + 0.5 * self.second_harmonic() * (2.0 * q + self.phi).cos()
    }

    /// Bounds `(min, max)` of the force over the circle, sampled finely.
    pub fn force_range(&self) -> (f64, f64) {
        let n = 4096;
        (0..n)
            .map(|i| self.force(2.0 * PI * i as f64 / n as f64))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), f| {
                (lo.min(f), hi.max(f))
            })
    }

    /// Momentum interval that the noiseless map sends into itself.
    ///
    /// Returns `None` for `gamma == 1`, where no such bounded interval exists.
    pub fn absorbing_interval(&self) -> Option<(f64, f64)> {
        if self.gamma >= 1.0 {
            return None;
        }
        let (lo, hi) = self.force_range();
        let scale = self.kick / (1.0 - self.gamma);
        // the sampled extrema can undershoot the true ones slightly
        let pad = 1e-3 * scale.max(1.0);
        Some((scale * lo - pad, scale * hi + pad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn force_values() {
        let p = MapParams::default();
        assert!((p.force(PI / 2.0) - 0.5).abs() < 1e-15);
        assert!((p.force(PI) - 0.5).abs() < 1e-15);
        let flat = MapParams { a: 0.0, ..p };
        assert_eq!(flat.force(0.0), 0.0);
    }

    #[test]
    fn literal_force_uses_unit_coefficient() {
        let p = MapParams {
            force_literal: true,
            ..MapParams::default()
        };
        // sin(pi/2) + sin(3 pi/2)
        assert!(p.force(PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn potential_gradient_matches_force() {
        let p = MapParams::default();
        let h = 1e-6;
        for i in 0..50 {
            let q = 0.13 * i as f64;
            let grad = (p.potential(q + h) - p.potential(q - h)) / (2.0 * h);
            assert!((grad + p.force(q)).abs() < 1e-8);
            let df = (p.force(q + h) - p.force(q - h)) / (2.0 * h);
            assert!((df - p.force_derivative(q)).abs() < 1e-8);
        }
    }

    #[test]
    fn validation_rejects_bad_values() {
        assert!(MapParams::new(1.0, 1.2, 0.1).is_err());
        assert!(MapParams::new(1.0, 0.2, 0.0).is_err());
        assert!(MapParams::new(-1.0, 0.2, 0.1).is_err());
        assert!(MapParams::new(1.0, 0.2, 0.1).is_ok());
    }

    #[test]
    fn absorbing_interval_is_forward_invariant() {
        let p = MapParams::default().with_kick(7.3);
        let (lo, hi) = p.absorbing_interval().unwrap();
        for i in 0..1000 {
            let q = 2.0 * PI * i as f64 / 1000.0;
            for &pp in &[lo, hi, 0.5 * (lo + hi)] {
                let next = p.gamma * pp + p.kick * p.force(q);
                assert!(next >= lo && next <= hi);
            }
        }
    }
}
