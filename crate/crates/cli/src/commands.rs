use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use dmkrm::analysis::{
    floor_aware_fit, growth_rate, k_sweep, ComparisonRow, Pipeline, SweepConfig,
};
use dmkrm::classical::{averaged_max_lyapunov, bifurcation_scan, BifurcationConfig, NoiseSpec};
use dmkrm::io::{
    bifurcation_records, husimi_records, series_records, spectrum_records, write_csv, CsvHeader,
};
use dmkrm::observables::{husimi, otoc_series, standard_initial_state, HusimiGrid, OtocConfig};
use dmkrm::quantum::{edge_population, DensityMatrix, HilbertSpace, PeriodMap, PropagatorConfig};
use dmkrm::spectra::{channel_spectrum, matrix_spectrum, SpectraConfig, SpectrumResult};
use dmkrm::ulam::{build_ulam_matrix_adaptive, UlamConfig, UlamGrid};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Command, Format, Resolved};
use crate::selftest::run_selftest;
use crate::svg::{raster, Mark, Plot};
use crate::CliError;

/// Files written by a run and a short JSON summary.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: Command,
    pub outputs: Vec<PathBuf>,
    pub summary: Value,
}

struct Writer<'a> {
    cfg: &'a Resolved,
    outputs: Vec<PathBuf>,
}

impl<'a> Writer<'a> {
    fn new(cfg: &'a Resolved) -> Result<Self, CliError> {
        fs::create_dir_all(&cfg.out)?;
        Ok(Self {
            cfg,
            outputs: Vec::new(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    fn header(&self, kind: &str) -> CsvHeader {
        let p = &self.cfg.params;
        let h = CsvHeader::new(kind).with("command", self.cfg.command.name());
        let h = match self.cfg.command {
            Command::GrowthSweep
            | Command::DecaySweep
            | Command::GapCompare
            | Command::Bifurcation => h.with("grid", &self.cfg.grid),
            _ => h.with("K", p.kick),
        };
        h.with("gamma", p.gamma)
            .with("hbar", p.hbar_eff)
            .with("a", p.a)
            .with("phi", p.phi)
            .with("N", self.cfg.dim)
            .with("seed", self.cfg.seed)
    }

    /// Writes `rows` as CSV and/or JSON according to the selected formats.
    fn table<R: Serialize>(
        &mut self,
        stem: &str,
        header: CsvHeader,
        rows: &[R],
    ) -> Result<(), CliError> {
        if self.cfg.wants(Format::Csv) {
            let path = self.path(&format!("{stem}.csv"));
            write_csv(BufWriter::new(File::create(&path)?), &header, rows)?;
            self.outputs.push(path);
        }
        if self.cfg.wants(Format::Json) {
            let path = self.path(&format!("{stem}.json"));
            let meta: serde_json::Map<String, Value> = header
                .metadata
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect();
            let doc = json!({ "kind": header.kind, "metadata": meta, "rows": rows });
            fs::write(
                &path,
                serde_json::to_string_pretty(&doc).expect("serializable rows") + "\n",
            )?;
            self.outputs.push(path);
        }
        Ok(())
    }

    fn svg(&mut self, stem: &str, body: impl FnOnce() -> String) -> Result<(), CliError> {
        if self.cfg.wants(Format::Svg) {
            let path = self.path(&format!("{stem}.svg"));
            fs::write(&path, body())?;
            self.outputs.push(path);
        }
        Ok(())
    }

    fn finish(mut self, summary: Value) -> Result<RunReport, CliError> {
        let path = self.path(&format!("{}.meta.json", self.cfg.command.name()));
        let names: Vec<String> = self.outputs.iter().map(|p| file_name(p)).collect();
        let doc = json!({
            "tool": "dmkrm",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.cfg.command.name(),
            "config": self.cfg,
            "outputs": names,
            "summary": summary,
        });
        fs::write(
            &path,
            serde_json::to_string_pretty(&doc).expect("serializable config") + "\n",
        )?;
        self.outputs.push(path);
        Ok(RunReport {
            command: self.cfg.command,
            outputs: self.outputs,
            summary,
        })
    }
}

fn file_name(p: &Path) -> String {
    p.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn run(cfg: &Resolved) -> Result<RunReport, CliError> {
    match cfg.command {
        Command::Otoc => otoc(cfg),
        Command::GrowthSweep => sweep(cfg, Pipeline::Growth),
        Command::DecaySweep => sweep(cfg, Pipeline::Decay),
        Command::GapCompare => sweep(cfg, Pipeline::Gap),
        Command::Husimi => husimi_snapshots(cfg),
        Command::Bifurcation => bifurcation(cfg),
        Command::Spectra => spectra(cfg),
        Command::Selftest => selftest(cfg),
    }
}

fn otoc_config(cfg: &Resolved) -> OtocConfig {
    OtocConfig {
        leakage: cfg.leakage,
        ..Default::default()
    }
}

fn otoc(cfg: &Resolved) -> Result<RunReport, CliError> {
    let space = HilbertSpace::new(cfg.dim, cfg.params.hbar_eff)?;
    let psi = standard_initial_state(&space)?;
    let series = otoc_series(&psi, &space, &cfg.params, &otoc_config(cfg), cfg.horizon)?;
    let (t0, t1) = cfg.fit_window;
    let fit = if t1 <= cfg.horizon {
        floor_aware_fit(&series, t0, t1, 1e-280).ok()
    } else {
        None
    };
    let mut w = Writer::new(cfg)?;
    w.table(
        "otoc",
        w.header("otoc").with("T", cfg.horizon),
        &series_records(&series),
    )?;
    let pts: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(&series.values)
        .map(|(t, v)| (*t as f64, *v))
        .collect();
    w.svg("otoc", || {
        Plot::new("OTOC", "t", "C(t)")
            .log_y()
            .with("C(t)", Mark::Line, pts)
            .render()
    })?;
    w.finish(json!({
        "c0": series.values[0],
        "growth_rate": growth_rate(&series).ok(),
        "decay_fit": fit,
        "max_edge_population": series.max_edge_population,
    }))
}

fn sweep_config(cfg: &Resolved, pipeline: Pipeline) -> SweepConfig {
    let mut s = SweepConfig::for_pipeline(pipeline);
    s.k_values = cfg.k_values.clone();
    s.base = cfg.params;
    s.dim = cfg.dim;
    s.horizon = cfg.horizon;
    s.fit_window = cfg.fit_window;
    s.otoc = otoc_config(cfg);
    s.lyapunov = cfg.lyapunov;
    s.lyapunov_count = cfg.lyapunov_count;
    s.seed = cfg.seed;
    s.n_eigs = cfg.n_eigs;
    s.ulam = UlamConfig {
        samples_per_cell: cfg.samples_per_cell,
        seed: cfg.seed,
        ..Default::default()
    };
    s.cell_side = Some(cfg.cell_side);
    s.noise_sigma = Some(cfg.noise_sigma);
    s.jobs = cfg.jobs;
    s
}

fn sweep(cfg: &Resolved, pipeline: Pipeline) -> Result<RunReport, CliError> {
    let rows = k_sweep(&sweep_config(cfg, pipeline))?;
    let stem = cfg.command.name();
    let mut w = Writer::new(cfg)?;
    let header = w
        .header("sweep")
        .with("pipeline", format!("{pipeline:?}").to_lowercase());
    w.table(stem, header, &rows)?;
    let col = |f: fn(&ComparisonRow) -> Option<f64>| -> Vec<(f64, f64)> {
        rows.iter().filter_map(|r| f(r).map(|v| (r.k, v))).collect()
    };
    w.svg(stem, || {
        let plot = Plot::new(cfg.command.name(), "K", "rate");
        let plot = match pipeline {
            Pipeline::Growth => plot
                .with("OTOC growth", Mark::Scatter, col(|r| r.otoc_growth_rate))
                .with(
                    "rescaled Lyapunov",
                    Mark::Line,
                    col(|r| r.rescaled_lyapunov),
                ),
            Pipeline::Decay => plot
                .with("OTOC decay", Mark::Scatter, col(|r| r.otoc_decay_rate))
                .with(
                    "rescaled Lyapunov",
                    Mark::Line,
                    col(|r| r.rescaled_lyapunov),
                )
                .with("rescaled IPR", Mark::Line, col(|r| r.rescaled_ipr)),
            Pipeline::Gap => plot
                .with("OTOC decay", Mark::Scatter, col(|r| r.otoc_decay_rate))
                .with("quantum gap", Mark::Line, col(|r| r.quantum_gap_rate))
                .with(
                    "classical gap",
                    Mark::Line,
                    col(|r| r.classical_gap_rate_noiseless),
                )
                .with(
                    "classical gap, noisy",
                    Mark::Line,
                    col(|r| r.classical_gap_rate_noisy),
                ),
        };
        let plot = if pipeline == Pipeline::Gap {
            plot
        } else {
            Plot {
                hline: Some(0.605),
                ..plot
            }
        };
        plot.render()
    })?;
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    w.finish(json!({ "rows": rows.len(), "rows_with_errors": failed }))
}

fn husimi_snapshots(cfg: &Resolved) -> Result<RunReport, CliError> {
    let space = HilbertSpace::new(cfg.dim, cfg.params.hbar_eff)?;
    let map = PeriodMap::new(&space, &cfg.params, &PropagatorConfig::default())?;
    let grid = HusimiGrid {
        n_q: cfg.husimi_cells,
        n_p: cfg.husimi_cells,
        ..Default::default()
    };
    let mut times = cfg.husimi_times.clone();
    times.sort_unstable();
    times.dedup();
    let mut rho = standard_initial_state(&space)?.density_matrix().0;
    let mut t = 0;
    let mut w = Writer::new(cfg)?;
    let mut snapshots = Vec::new();
    for &target in &times {
        while t < target {
            rho = map.apply_channel(&rho)?;
            t += 1;
        }
        let h = husimi(&DensityMatrix(rho.clone()), &space, &grid)?;
        let stem = format!("husimi_t{target}");
        w.table(
            &stem,
            w.header("husimi").with("t", target),
            &husimi_records(&h),
        )?;
        w.svg(&stem, || {
            raster(
                &format!("Husimi, t = {target}"),
                grid.n_q,
                grid.n_p,
                &h.values,
                (grid.q_min, grid.q_max),
                (grid.p_min, grid.p_max),
            )
        })?;
        snapshots.push(json!({
            "t": target,
            "total": h.total(),
            "support_area": h.support_area(0.01),
            "edge_population": edge_population(&rho, 5),
        }));
    }
    w.finish(json!({ "snapshots": snapshots }))
}

fn bifurcation(cfg: &Resolved) -> Result<RunReport, CliError> {
    let bcfg = BifurcationConfig {
        seed: cfg.seed,
        ..Default::default()
    };
    let columns = bifurcation_scan(&cfg.k_values, &cfg.params, &bcfg)?;
    #[derive(Serialize)]
    struct Summary {
        k: f64,
        clusters: usize,
        regular: bool,
        lyapunov: f64,
    }
    let mut summary = Vec::with_capacity(columns.len());
    for c in &columns {
        let params = cfg.params.with_kick(c.kick);
        let avg = averaged_max_lyapunov(&params, cfg.lyapunov_count, cfg.seed, &cfg.lyapunov)?;
        summary.push(Summary {
            k: c.kick,
            clusters: c.total_clusters(bcfg.cluster_tol),
            regular: c.is_regular(),
            lyapunov: avg.mean,
        });
    }
    let agree = summary
        .iter()
        .filter(|s| s.regular == (s.lyapunov < 0.0))
        .count();
    let records = bifurcation_records(&columns);
    let mut w = Writer::new(cfg)?;
    w.table("bifurcation", w.header("bifurcation"), &records)?;
    w.table(
        "bifurcation_summary",
        w.header("bifurcation-summary"),
        &summary,
    )?;
    w.svg("bifurcation", || {
        let pts = records.iter().map(|r| (r.k, r.p)).collect();
        Plot::new("bifurcation", "K", "p")
            .with("p", Mark::Scatter, pts)
            .render()
    })?;
    w.finish(json!({
        "columns": columns.len(),
        "regular_matches_negative_lyapunov": agree as f64 / summary.len() as f64,
    }))
}

fn spectra(cfg: &Resolved) -> Result<RunReport, CliError> {
    let space = HilbertSpace::new(cfg.dim, cfg.params.hbar_eff)?;
    let scfg = SpectraConfig::default();
    let quantum = channel_spectrum(&space, &cfg.params, &scfg, cfg.n_eigs)?;
    let ucfg = UlamConfig {
        samples_per_cell: cfg.samples_per_cell,
        seed: cfg.seed,
        ..Default::default()
    };
    let grid = UlamGrid::standard(cfg.cell_side)?;
    let t = build_ulam_matrix_adaptive(&cfg.params, &grid, &NoiseSpec::off(), &ucfg)?;
    let classical = matrix_spectrum(&t, cfg.n_eigs.min(t.cells()), &scfg)?;
    let mut w = Writer::new(cfg)?;
    for (name, s) in [("quantum", &quantum), ("classical", &classical)] {
        let header = w
            .header("spectrum")
            .with("operator", name)
            .with("method", format!("{:?}", s.method).to_lowercase());
        w.table(&format!("spectrum_{name}"), header, &spectrum_records(s))?;
    }
    let plane = |s: &SpectrumResult| s.eigenvalues.iter().map(|z| (z.re, z.im)).collect();
    w.svg("spectra", || {
        Plot::new("leading eigenvalues", "Re", "Im")
            .with("quantum", Mark::Scatter, plane(&quantum))
            .with("classical", Mark::Scatter, plane(&classical))
            .render()
    })?;
    w.finish(json!({
        "quantum_count": quantum.eigenvalues.len(),
        "classical_count": classical.eigenvalues.len(),
        "ulam_cells": t.cells(),
        "ulam_window": [t.grid.p_min, t.grid.p_max],
    }))
}

fn selftest(cfg: &Resolved) -> Result<RunReport, CliError> {
    let checks = run_selftest();
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.check.as_str())
        .collect();
    let mut w = Writer::new(cfg)?;
    w.table("selftest", CsvHeader::new("selftest"), &checks)?;
    let report = w.finish(json!({ "checks": checks.len(), "failed": failed }))?;
    if failed.is_empty() {
        Ok(report)
    } else {
        Err(CliError::Check(format!(
            "selftest failed: {}",
            failed.join(", ")
        )))
    }
}
