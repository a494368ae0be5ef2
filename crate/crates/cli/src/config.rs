//! Run configuration: a TOML file, command-line overrides, and per-command
//! defaults, resolved into one concrete record that is written next to the
//! outputs.

use std::path::{Path, PathBuf};

use dmkrm::analysis::k_grid;
use dmkrm::classical::LyapunovConfig;
use dmkrm::observables::LeakagePolicy;
use dmkrm::MapParams;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "DMKRM_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Otoc,
    GrowthSweep,
    DecaySweep,
    Husimi,
    Bifurcation,
    Spectra,
    GapCompare,
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Otoc => "otoc",
            Command::GrowthSweep => "growth-sweep",
            Command::DecaySweep => "decay-sweep",
            Command::Husimi => "husimi",
            Command::Bifurcation => "bifurcation",
            Command::Spectra => "spectra",
            Command::GapCompare => "gap-compare",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

/// Everything settable from a file or the command line. Unset fields fall
/// back to the command's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<Command>,
    #[serde(rename = "K")]
    pub kick: Option<f64>,
    pub gamma: Option<f64>,
    pub hbar: Option<f64>,
    pub a: Option<f64>,
    pub phi: Option<f64>,
    pub force_literal: Option<bool>,
    #[serde(rename = "N")]
    pub dim: Option<usize>,
    #[serde(rename = "T")]
    pub horizon: Option<u64>,
    /// `start:end:step`, a comma list, or one value.
    pub grid: Option<String>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Vec<Format>>,
    pub fit_window: Option<(u64, u64)>,
    pub lyapunov_count: Option<usize>,
    pub lyapunov_transient: Option<usize>,
    pub lyapunov_steps: Option<usize>,
    pub n_eigs: Option<usize>,
    pub samples_per_cell: Option<usize>,
    pub cell_side: Option<f64>,
    pub noise_sigma: Option<f64>,
    pub husimi_times: Option<Vec<u64>>,
    pub husimi_cells: Option<usize>,
    pub leakage: Option<LeakagePolicy>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        $( if $top.$f.is_some() { $base.$f = $top.$f.clone(); } )*
    };
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: &RunConfig) -> Self {
        overlay!(self, top; command, kick, gamma, hbar, a, phi, force_literal, dim, horizon, grid,
            seed, jobs, out, format, fit_window, lyapunov_count, lyapunov_transient, lyapunov_steps,
            n_eigs, samples_per_cell, cell_side, noise_sigma, husimi_times, husimi_cells, leakage);
        self
    }

    /// Fills unset fields from the command defaults and validates the result.
    pub fn resolve(
        &self,
        command: Command,
        env_out: Option<PathBuf>,
    ) -> Result<Resolved, CliError> {
        let d = Defaults::for_command(command);
        let params = MapParams {
            kick: self.kick.unwrap_or(d.kick),
            gamma: self.gamma.unwrap_or(0.2),
            hbar_eff: self.hbar.unwrap_or(d.hbar),
            a: self.a.unwrap_or(0.5),
            phi: self.phi.unwrap_or(std::f64::consts::FRAC_PI_2),
            force_literal: self.force_literal.unwrap_or(false),
        };
        params
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let grid = self.grid.clone().unwrap_or_else(|| d.grid.to_string());
        let k_values = parse_grid(&grid)?;
        let out = self
            .out
            .clone()
            .or(env_out)
            .unwrap_or_else(|| PathBuf::from("dmkrm-out"));
        let formats = self.format.clone().unwrap_or_else(|| vec![Format::Csv]);
        if formats.is_empty() {
            return Err(CliError::Config("empty format list".into()));
        }
        let lyapunov = LyapunovConfig {
            transient: self.lyapunov_transient.unwrap_or(1_000),
            total: self.lyapunov_transient.unwrap_or(1_000)
                + self.lyapunov_steps.unwrap_or(100_000),
        };
        let r = Resolved {
            command,
            params,
            dim: self.dim.unwrap_or(d.dim),
            horizon: self.horizon.unwrap_or(100),
            grid,
            k_values,
            seed: self.seed.unwrap_or(1),
            jobs: self.jobs.unwrap_or(0),
            out,
            formats,
            fit_window: self.fit_window.unwrap_or((5, 100)),
            lyapunov_count: self.lyapunov_count.unwrap_or(1000),
            lyapunov,
            n_eigs: self.n_eigs.unwrap_or(d.n_eigs),
            samples_per_cell: self.samples_per_cell.unwrap_or(1000),
            cell_side: self.cell_side.unwrap_or(params.hbar_eff),
            noise_sigma: self.noise_sigma.unwrap_or(params.hbar_eff),
            husimi_times: self
                .husimi_times
                .clone()
                .unwrap_or_else(|| vec![1, 3, 8, 20]),
            husimi_cells: self.husimi_cells.unwrap_or(200),
            leakage: self.leakage.unwrap_or(LeakagePolicy::Record),
        };
        r.validate()?;
        Ok(r)
    }
}

struct Defaults {
    kick: f64,
    hbar: f64,
    dim: usize,
    grid: &'static str,
    n_eigs: usize,
}

impl Defaults {
    fn for_command(c: Command) -> Self {
        let base = Defaults {
            kick: 5.4,
            hbar: 0.031,
            dim: 1024,
            grid: "1:10:0.1",
            n_eigs: 10,
        };
        match c {
            Command::Otoc | Command::Selftest => base,
            Command::GrowthSweep | Command::DecaySweep => Defaults {
                hbar: 0.062,
                dim: 256,
                ..base
            },
            Command::GapCompare => Defaults {
                hbar: 0.15,
                dim: 128,
                ..base
            },
            Command::Spectra => Defaults {
                kick: 1.1,
                hbar: 0.15,
                dim: 128,
                n_eigs: 100,
                ..base
            },
            Command::Husimi => Defaults {
                kick: 1.1,
                hbar: 0.062,
                dim: 256,
                ..base
            },
            Command::Bifurcation => Defaults {
                grid: "1:10:0.05",
                ..base
            },
        }
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub command: Command,
    pub params: MapParams,
    pub dim: usize,
    pub horizon: u64,
    pub grid: String,
    pub k_values: Vec<f64>,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
    pub formats: Vec<Format>,
    pub fit_window: (u64, u64),
    pub lyapunov_count: usize,
    pub lyapunov: LyapunovConfig,
    pub n_eigs: usize,
    pub samples_per_cell: usize,
    pub cell_side: f64,
    pub noise_sigma: f64,
    pub husimi_times: Vec<u64>,
    pub husimi_cells: usize,
    pub leakage: LeakagePolicy,
}

impl Resolved {
    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.horizon == 0 {
            return bad("T must be >= 1".into());
        }
        if self.fit_window.0 >= self.fit_window.1 {
            return bad(format!("fit window {:?} is empty", self.fit_window));
        }
        if self.lyapunov_count == 0 || self.samples_per_cell == 0 || self.n_eigs == 0 {
            return bad("counts must be positive".into());
        }
        if !(self.cell_side > 0.0) || !(self.noise_sigma >= 0.0) {
            return bad("cell_side must be > 0 and noise_sigma >= 0".into());
        }
        if self.husimi_times.is_empty() || self.husimi_cells == 0 {
            return bad("husimi times and cells must be non-empty".into());
        }
        Ok(())
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// Largest number of K values a grid may expand to.
pub const MAX_GRID_POINTS: usize = 100_000;

/// `start:end:step`, a comma-separated list, or a single value.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Config(format!("bad K grid {s:?}"));
    let num = |t: &str| -> Result<f64, CliError> {
        let v: f64 = t.trim().parse().map_err(|_| bad())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad())
        }
    };
    let values = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || b < a || (b - a) / step > MAX_GRID_POINTS as f64 {
            return Err(bad());
        }
        k_grid(a, b, step)
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() || values.len() > MAX_GRID_POINTS || values.iter().any(|k| *k < 0.0) {
        return Err(bad());
    }
    Ok(values)
}
