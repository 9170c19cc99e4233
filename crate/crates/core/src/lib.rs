//! Numerical laboratory for the Seiberg-Witten equations on circle bundles
//! over surfaces, discretized on a twisted 3D lattice and studied in the
//! adiabatic limit where the fibers shrink.
//!
//! Layers, bottom to top:
//! - [`geometry`]: closed-form invariants of Killing m.a.c. structures.
//! - [`spinor`]: pointwise Clifford algebra and the quadratic map `tau`.
//! - [`lattice`]: grids, link fields and the matrix-free Dirac blocks.
//! - [`spectral`]: restarted Lanczos, kernel counting, spectral gaps.
//! - [`sw`]: functional, gradient, solver, linearization, classifier, Taubes step.
//! - [`harness`]: sweeps, power-law fits, reports and the CLI driver.

pub mod exec;
pub mod geometry;
pub mod harness;
pub mod lattice;
pub mod spectral;
pub mod spinor;
pub mod sw;

pub use num_complex::Complex64;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("lattice mismatch: {0}")]
    LatticeMismatch(String),
    #[error("ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("no convergence after {iterations} iterations (best residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("solver stopped after {} iterations at residual {residual:e}", history.len())]
    SolverFailed { residual: f64, history: Vec<f64> },
    #[error("contraction violated: observed ratio {observed} exceeds certified bound {bound}")]
    ContractionViolated { observed: f64, bound: f64 },
    #[error("no reliable spectral gap: {0}")]
    NoGap(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
