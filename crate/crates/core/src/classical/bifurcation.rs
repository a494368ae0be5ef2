use std::f64::consts::{PI, TAU};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{map_step_det, PhasePoint};
use crate::error::{Error, Result};
use crate::params::MapParams;
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BifurcationConfig {
    pub transient: usize,
    pub record: usize,
    pub initial_conditions: usize,
    pub seed: u64,
    /// Samples closer than this in `p` belong to the same cluster.
    pub cluster_tol: f64,
    /// Longest period still counted as a regular (periodic) orbit.
    pub max_period: usize,
}

impl Default for BifurcationConfig {
    fn default() -> Self {
        Self {
            transient: 2_000,
            record: 256,
            initial_conditions: 8,
            seed: 0,
            cluster_tol: 1e-6,
            max_period: 64,
        }
    }
}

/// Recorded momenta for one kick strength.
#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationColumn {
    pub kick: f64,
    /// `record` samples per initial condition, trajectories concatenated.
    pub samples: Vec<f64>,
    /// Distinct `p` clusters per trajectory.
    pub clusters: Vec<usize>,
    max_period: usize,
}

impl BifurcationColumn {
    /// Distinct clusters across all trajectories.
    pub fn total_clusters(&self, tol: f64) -> usize {
        count_clusters(&self.samples, tol)
    }

    /// True when most trajectories settle on an orbit of period at most `max_period`.
    pub fn is_regular(&self) -> bool {
        let regular = self
            .clusters
            .iter()
            .filter(|&&c| c <= self.max_period)
            .count();
        2 * regular > self.clusters.len()
    }
}

/// Number of groups in `values` separated by gaps larger than `tol`.
pub fn count_clusters(values: &[f64], tol: f64) -> usize {
    if values.is_empty() {
        return 0;
    }
    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    1 + sorted.windows(2).filter(|w| w[1] - w[0] > tol).count()
}

/// Records the long-time momenta of several trajectories for every kick
/// strength in `kicks`.
pub fn bifurcation_scan(
    kicks: &[f64],
    base: &MapParams,
    config: &BifurcationConfig,
) -> Result<Vec<BifurcationColumn>> {
    if kicks.is_empty() {
        return Err(Error::InvalidParameter("empty kick grid".into()));
    }
    if config.record == 0 || config.initial_conditions == 0 {
        return Err(Error::InvalidParameter(
            "record and initial_conditions must be positive".into(),
        ));
    }
    kicks
        .par_iter()
        .enumerate()
        .map(|(col, &kick)| {
            let params = base.with_kick(kick);
            params.validate()?;
            let mut samples = Vec::with_capacity(config.record * config.initial_conditions);
            let mut clusters = Vec::with_capacity(config.initial_conditions);
            for ic in 0..config.initial_conditions {
                let stream = (col as u64) << 32 | ic as u64;
                let mut rng = stream_rng(config.seed, stream);
                let mut x = PhasePoint::new(rng.random_range(0.0..TAU), rng.random_range(-PI..=PI));
                for step in 0..config.transient {
                    x = map_step_det(x, &params);
                    if !x.p.is_finite() {
                        return Err(Error::Divergent { step, p: x.p });
                    }
                }
                let start = samples.len();
                for _ in 0..config.record {
                    x = map_step_det(x, &params);
                    samples.push(x.p);
                }
                clusters.push(count_clusters(&samples[start..], config.cluster_tol));
            }
            Ok(BifurcationColumn {
                kick,
                samples,
                clusters,
                max_period: config.max_period,
            })
        })
        .collect()
}
