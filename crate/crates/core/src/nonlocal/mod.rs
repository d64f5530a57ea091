//! Periodic pseudo-spectral realization of the Leray-form Navier-Stokes operator.
//!
//! The symbolic layer keeps the pressure as an opaque `leray_pressure` marker;
//! here it is computed by a spectral Poisson solve on the torus `[0, 2pi)^d`
//! with zero-mean gauge, and `A^n u` is generated by the binomial recursion for
//! the quadratic nonlinearity.

use thiserror::Error;

mod grid;
mod init;
pub mod io;
mod navier_stokes;
mod spectral;
mod symbolic;

pub use grid::{Field, PeriodicGrid};
pub use init::{random_band_limited, taylor_green_2d, taylor_green_3d};
pub use navier_stokes::{
    divergence, ns_rhs, ns_taylor_coefficients, pressure_solve, NsCoefficients, NsOperator, NsOptions, RhsParts, DIV_TOL,
    NOISE_FLOOR,
};
pub use spectral::Spectral;
pub use symbolic::{pressure_source, pressure_symbolic, PressureSymbolic};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NonlocalError {
    #[error("grid: {0}")]
    Grid(String),
    #[error("shape: {0}")]
    Shape(String),
    #[error("non-finite values in field")]
    NonFinite,
    #[error("divergence violation at n = {n}: max |div| = {divergence:e} against scale {scale:e}")]
    Divergence { n: usize, divergence: f64, scale: f64 },
    #[error("{0}")]
    Parameter(String),
    #[error("integration blew up at t = {t}; try a smaller dt")]
    Blowup { t: f64 },
    #[error("io: {0}")]
    Io(String),
}

#[cfg(test)]
mod tests;
