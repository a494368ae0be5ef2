//! Fast invariant checks on small instances, run by `dmkrm selftest`.

use dmkrm::classical::{jacobian, NoiseSpec, PhasePoint};
use dmkrm::observables::{
    husimi, otoc_series, standard_initial_state, HusimiGrid, LeakagePolicy, OtocConfig,
};
use dmkrm::quantum::{max_abs, trace_product, CMat, HilbertSpace, PeriodMap, PropagatorConfig};
use dmkrm::rng::stream_rng;
use dmkrm::ulam::{build_ulam_matrix_adaptive, UlamConfig, UlamGrid};
use dmkrm::{MapParams, Result};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub check: String,
    /// Worst observed deviation.
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn record(check: &str, value: Result<f64>, tolerance: f64) -> CheckRecord {
    let value = value.unwrap_or(f64::INFINITY);
    CheckRecord {
        check: check.into(),
        value,
        tolerance,
        passed: value <= tolerance,
    }
}

fn random_matrix(n: usize, seed: u64) -> CMat {
    let mut rng = stream_rng(seed, 0);
    CMat::from_fn(n, n, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

const DIM: usize = 64;
const HBAR: f64 = 0.25;

fn params() -> Result<MapParams> {
    MapParams::new(2.5, 0.3, HBAR)
}

fn jacobian_determinant() -> Result<f64> {
    let p = params()?;
    let mut rng = stream_rng(7, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let x = PhasePoint::new(rng.random_range(0.0..6.3), rng.random_range(-10.0..10.0));
        let j = jacobian(x, &p);
        worst = worst.max((j[0][0] * j[1][1] - j[0][1] * j[1][0] - p.gamma).abs());
    }
    Ok(worst)
}

fn channel_trace_and_hermiticity() -> Result<f64> {
    let space = HilbertSpace::new(DIM, HBAR)?;
    let map = PeriodMap::new(&space, &params()?, &PropagatorConfig::default())?;
    let mut rho = standard_initial_state(&space)?.density_matrix().0;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        rho = map.apply_channel(&rho)?;
        worst = worst.max((rho.trace() - Complex64::new(1.0, 0.0)).norm());
        worst = worst.max(max_abs(&(&rho - rho.adjoint())));
    }
    Ok(worst)
}

fn adjoint_identity() -> Result<f64> {
    let space = HilbertSpace::new(DIM, HBAR)?;
    let map = PeriodMap::new(&space, &params()?, &PropagatorConfig::default())?;
    let id = CMat::identity(DIM, DIM);
    Ok(max_abs(&(map.apply_adjoint(&id)? - id)))
}

fn duality() -> Result<f64> {
    let space = HilbertSpace::new(DIM, HBAR)?;
    let map = PeriodMap::new(&space, &params()?, &PropagatorConfig::default())?;
    let x = random_matrix(DIM, 11);
    let b = random_matrix(DIM, 12);
    let lhs = trace_product(&map.apply_channel(&x)?, &b);
    let rhs = trace_product(&x, &map.apply_adjoint(&b)?);
    Ok((lhs - rhs).norm() / lhs.norm().max(1.0))
}

fn otoc_initial_value() -> Result<f64> {
    let space = HilbertSpace::new(DIM, HBAR)?;
    let psi = standard_initial_state(&space)?;
    let cfg = OtocConfig {
        leakage: LeakagePolicy::Record,
        ..Default::default()
    };
    let s = otoc_series(&psi, &space, &params()?, &cfg, 2)?;
    Ok((s.values[0] / (HBAR * HBAR) - 1.0).abs())
}

fn ulam_column_sums() -> Result<f64> {
    let cfg = UlamConfig {
        samples_per_cell: 64,
        seed: 3,
        ..Default::default()
    };
    let t = build_ulam_matrix_adaptive(
        &params()?,
        &UlamGrid::standard(0.25)?,
        &NoiseSpec::off(),
        &cfg,
    )?;
    Ok(t.matrix
        .column_sums()
        .iter()
        .map(|s| (s - 1.0).abs())
        .fold(0.0, f64::max))
}

fn husimi_normalization() -> Result<f64> {
    let space = HilbertSpace::new(DIM, HBAR)?;
    let psi = standard_initial_state(&space)?;
    let grid = HusimiGrid {
        n_q: 96,
        n_p: 96,
        ..Default::default()
    };
    Ok((husimi(&psi, &space, &grid)?.total() - 1.0).abs())
}

pub fn run_selftest() -> Vec<CheckRecord> {
    vec![
        record("jacobian-determinant", jacobian_determinant(), 1e-12),
        record(
            "channel-trace-hermiticity",
            channel_trace_and_hermiticity(),
            1e-10,
        ),
        record("adjoint-unital", adjoint_identity(), 1e-10),
        record("channel-duality", duality(), 1e-10),
        record("otoc-initial-value", otoc_initial_value(), 1e-8),
        record("ulam-column-stochastic", ulam_column_sums(), 1e-12),
        record("husimi-normalization", husimi_normalization(), 1e-3),
    ]
}
