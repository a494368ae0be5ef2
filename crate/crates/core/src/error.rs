use thiserror::Error;

/// Errors produced by the simulation and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trajectory diverged at step {step} (p = {p})")]
    Divergent { step: usize, p: f64 },

    #[error("Ulam window too small: escaped mass {escaped:.3e} exceeds {threshold:.1e}")]
    WindowTooSmall { escaped: f64, threshold: f64 },

    #[error(
        "power iteration did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    NotConverged { iterations: usize, residual: f64 },

    #[error("Krylov solver converged {converged}/{requested} eigenvalues (worst residual {residual:.3e})")]
    KrylovNotConverged {
        requested: usize,
        converged: usize,
        residual: f64,
    },

    #[error("trace drifted by {drift:.3e} in one period; increase integrator substeps")]
    TraceDrift { drift: f64 },

    #[error("population {population:.3e} within {levels} levels of the momentum cutoff")]
    BoundaryLeakage { population: f64, levels: usize },

    #[error("coherent state tail mass {tail:.3e} beyond the momentum cutoff")]
    CoherentStateTruncated { tail: f64 },

    #[error("non-positive value {value:e} at t = {t} inside the fit window")]
    NonPositive { t: u64, value: f64 },

    #[error("no eigenvalue below the unit-modulus cluster among {count} computed")]
    NoDecayingEigenvalue { count: usize },

    #[error("{0}")]
    Numerical(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
