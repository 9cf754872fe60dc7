//! Numerical laboratory for open chaotic maps on the torus.
//!
//! The crate quantizes the tri-baker and the cat map with a strip opening,
//! computes their resonance spectra by dense diagonalization, and rebuilds
//! the long-lived part of those spectra from scar functions launched on short
//! periodic orbits of the classical repeller.
//!
//! Module layout follows the pipeline:
//!
//! - [`torus`]: kinematics on the quantum torus and the closed/open propagators.
//! - [`classical`]: classical maps, periodic orbits with exact rational points,
//!   per-step actions and the box-counting dimension of the trapped set.
//! - [`scar`]: coherent states, periodic-orbit modes and right/left scar pairs.
//! - [`spectral`]: exact resonances, the reduced generalized eigenproblem in
//!   the scar basis and spectrum matching.
//! - [`analysis`]: Husimi and mixed phase-space representations, overlaps and
//!   fractal Weyl fits.

// `!(x <= bound)` is used on purpose: NaN must fail range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod classical;
mod error;
pub mod linalg;
pub mod scar;
pub mod spectral;
pub mod torus;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Dense complex matrix used for propagators, bases and reduced problems.
pub type ComplexMatrix = faer::Mat<Complex64>;
