//! Classical and quantum simulation of the dissipative modified kicked rotator.
//!
//! The crate covers both sides of the quantum-classical comparison:
//!
//! * [`classical`]: the map, tangent dynamics, Lyapunov exponents, bifurcation scans;
//! * [`ulam`]: cell-based transfer matrices approximating the Perron-Frobenius operator;
//! * [`quantum`]: the truncated momentum basis, kick/free propagators and the
//!   Lindblad dissipator, evolved in either picture;
//! * [`observables`]: OTOC series, IPR, Husimi maps, equilibrium states;
//! * [`spectra`]: leading eigenvalues of the quantum channel and Ulam matrices;
//! * [`analysis`]: log-linear fits, rescalings and kick-strength sweeps;
//! * [`io`]: CSV and coordinate-list readers and writers.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod classical;
pub mod error;
pub mod io;
pub mod observables;
pub mod params;
pub mod quantum;
pub mod rng;
pub mod sparse;
pub mod spectra;
pub mod ulam;

pub use error::{Error, Result};
pub use params::MapParams;
