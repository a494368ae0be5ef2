use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{floor_aware_fit, growth_rate, rescale};
use crate::classical::{averaged_max_lyapunov, LyapunovConfig, NoiseSpec};
use crate::error::{Error, Result};
use crate::observables::{
    equilibrium_state, ipr, otoc_series, standard_initial_state, EquilibriumConfig, LeakagePolicy,
    OtocConfig,
};
use crate::params::MapParams;
use crate::quantum::HilbertSpace;
use crate::spectra::{channel_spectrum, matrix_spectrum, spectral_gap_rate, SpectraConfig};
use crate::ulam::{build_ulam_matrix_adaptive, UlamConfig, UlamGrid};

/// Which set of columns a sweep fills.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    /// OTOC growth over the first kick against the Lyapunov exponent.
    Growth,
    /// OTOC decay rate against the Lyapunov exponent and the IPR.
    Decay,
    /// OTOC decay rate against quantum and classical spectral gaps.
    Gap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub pipeline: Pipeline,
    pub k_values: Vec<f64>,
    pub base: MapParams,
    pub dim: usize,
    pub horizon: u64,
    pub fit_window: (u64, u64),
    /// Values at or below this end the fit window early.
    pub floor: f64,
    pub otoc: OtocConfig,
    pub lyapunov: LyapunovConfig,
    pub lyapunov_count: usize,
    pub seed: u64,
    pub equilibrium: EquilibriumConfig,
    pub spectra: SpectraConfig,
    pub n_eigs: usize,
    pub gap_tol: f64,
    pub ulam: UlamConfig,
    /// Ulam cell side; defaults to the base `hbar_eff`.
    pub cell_side: Option<f64>,
    /// Classical noise width; defaults to the base `hbar_eff`.
    pub noise_sigma: Option<f64>,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self::for_pipeline(Pipeline::Decay)
    }
}

impl SweepConfig {
    /// Desk-scale defaults: `N = 256, hbar = 0.062` for the Lyapunov
    /// comparisons and `N = 128, hbar = 0.15` for the spectral one.
    pub fn for_pipeline(pipeline: Pipeline) -> Self {
        let (dim, hbar) = match pipeline {
            Pipeline::Growth | Pipeline::Decay => (256, 0.062),
            Pipeline::Gap => (128, 0.15),
        };
        Self {
            pipeline,
            k_values: k_grid(1.0, 10.0, 0.1),
            base: MapParams::default().with_hbar(hbar),
            dim,
            horizon: 100,
            fit_window: (5, 100),
            floor: 1e-280,
            otoc: OtocConfig {
                leakage: LeakagePolicy::Record,
                ..Default::default()
            },
            lyapunov: LyapunovConfig::default(),
            lyapunov_count: 1000,
            seed: 1,
            equilibrium: EquilibriumConfig::default(),
            spectra: SpectraConfig::default(),
            n_eigs: 10,
            gap_tol: 1e-6,
            ulam: UlamConfig::default(),
            cell_side: None,
            noise_sigma: None,
            jobs: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.k_values.is_empty() {
            return Err(Error::InvalidParameter("empty K grid".into()));
        }
        if let Some(k) = self.k_values.iter().find(|k| !k.is_finite() || **k < 0.0) {
            return Err(Error::InvalidParameter(format!("K = {k}")));
        }
        if self.fit_window.1 > self.horizon || self.fit_window.0 >= self.fit_window.1 {
            return Err(Error::InvalidParameter(
                "fit window must lie inside the horizon".into(),
            ));
        }
        HilbertSpace::new(self.dim, self.base.hbar_eff)?;
        Ok(())
    }
}

/// `start, start + step, ...` up to `end` inclusive, each value rounded to
/// 1e-9 so that grids built from decimal steps compare equal.
pub fn k_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || end < start {
        return Vec::new();
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    (0..=count)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect()
}

/// One K of a sweep. Columns the pipeline does not fill, or that failed,
/// are `None`; failures are described in `status`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub k: f64,
    pub otoc_decay_rate: Option<f64>,
    pub otoc_decay_confidence: Option<f64>,
    pub fit_shrunk: bool,
    pub otoc_growth_rate: Option<f64>,
    pub lyapunov: Option<f64>,
    pub rescaled_lyapunov: Option<f64>,
    pub ipr: Option<f64>,
    pub rescaled_ipr: Option<f64>,
    pub quantum_gap_rate: Option<f64>,
    pub classical_gap_rate_noiseless: Option<f64>,
    pub classical_gap_rate_noisy: Option<f64>,
    pub max_edge_population: Option<f64>,
    pub status: String,
}

impl ComparisonRow {
    fn empty(k: f64) -> Self {
        Self {
            k,
            otoc_decay_rate: None,
            otoc_decay_confidence: None,
            fit_shrunk: false,
            otoc_growth_rate: None,
            lyapunov: None,
            rescaled_lyapunov: None,
            ipr: None,
            rescaled_ipr: None,
            quantum_gap_rate: None,
            classical_gap_rate_noiseless: None,
            classical_gap_rate_noisy: None,
            max_edge_population: None,
            status: String::new(),
        }
    }
}

fn record<T>(errors: &mut Vec<String>, what: &str, r: Result<T>) -> Option<T> {
    r.map_err(|e| errors.push(format!("{what}: {e}"))).ok()
}

fn run_row(k: f64, cfg: &SweepConfig) -> ComparisonRow {
    let mut row = ComparisonRow::empty(k);
    let mut errors = Vec::new();
    let params = cfg.base.with_kick(k);
    let hbar = params.hbar_eff;
    let space = record(&mut errors, "space", HilbertSpace::new(cfg.dim, hbar));

    if let Some(space) = &space {
        let series = standard_initial_state(space)
            .and_then(|psi| otoc_series(&psi, space, &params, &cfg.otoc, cfg.horizon));
        if let Some(series) = record(&mut errors, "otoc", series) {
            row.max_edge_population = Some(series.max_edge_population);
            row.otoc_growth_rate = record(&mut errors, "growth", growth_rate(&series));
            if cfg.pipeline != Pipeline::Growth {
                let (t0, t1) = cfg.fit_window;
                if let Some(fit) = record(
                    &mut errors,
                    "fit",
                    floor_aware_fit(&series, t0, t1, cfg.floor),
                ) {
                    row.otoc_decay_rate = Some(fit.rate);
                    row.otoc_decay_confidence = Some(fit.confidence);
                    row.fit_shrunk = fit.shrunk;
                }
            }
        }
    }

    if cfg.pipeline != Pipeline::Gap {
        let avg = averaged_max_lyapunov(&params, cfg.lyapunov_count, cfg.seed, &cfg.lyapunov);
        if let Some(avg) = record(&mut errors, "lyapunov", avg) {
            row.lyapunov = Some(avg.mean);
            row.rescaled_lyapunov = Some(rescale(avg.mean, 0.0).0);
        }
    }

    if cfg.pipeline == Pipeline::Decay {
        if let Some(space) = &space {
            if let Some(eq) = record(
                &mut errors,
                "equilibrium",
                equilibrium_state(space, &params, &cfg.equilibrium),
            ) {
                if !eq.converged {
                    errors.push(format!(
                        "equilibrium: not converged, residual {:.3e}",
                        eq.residual
                    ));
                }
                let v = ipr(&eq.state);
                row.ipr = Some(v);
                row.rescaled_ipr = Some(rescale(0.0, v).1);
            }
        }
    }

    if cfg.pipeline == Pipeline::Gap {
        if let Some(space) = &space {
            let spec = channel_spectrum(space, &params, &cfg.spectra, cfg.n_eigs);
            row.quantum_gap_rate = record(
                &mut errors,
                "quantum gap",
                spec.and_then(|s| spectral_gap_rate(&s, cfg.gap_tol)),
            );
        }
        let side = cfg.cell_side.unwrap_or(hbar);
        let sigma = cfg.noise_sigma.unwrap_or(hbar);
        let noisy = NoiseSpec {
            enabled: true,
            sigma,
            seed: cfg.seed,
        };
        for (noise, name) in [(NoiseSpec::off(), "noiseless"), (noisy, "noisy")] {
            let rate = UlamGrid::standard(side)
                .and_then(|g| build_ulam_matrix_adaptive(&params, &g, &noise, &cfg.ulam))
                .and_then(|t| matrix_spectrum(&t, cfg.n_eigs, &cfg.spectra))
                .and_then(|s| spectral_gap_rate(&s, cfg.gap_tol));
            let rate = record(&mut errors, &format!("classical gap ({name})"), rate);
            match name {
                "noiseless" => row.classical_gap_rate_noiseless = rate,
                _ => row.classical_gap_rate_noisy = rate,
            }
        }
    }

    row.status = if errors.is_empty() {
        "ok".into()
    } else {
        errors.join("; ")
    };
    row
}

/// Runs the pipeline at every K of the grid, in parallel, and returns the
/// rows sorted by K. Per-row failures are recorded, not raised.
pub fn k_sweep(cfg: &SweepConfig) -> Result<Vec<ComparisonRow>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Numerical(e.to_string()))?;
    let mut rows: Vec<ComparisonRow> =
        pool.install(|| cfg.k_values.par_iter().map(|k| run_row(*k, cfg)).collect());
    rows.sort_by(|a, b| a.k.total_cmp(&b.k));
    Ok(rows)
}
