//! Photon-transport theory for an array of two-level atoms chirally coupled
//! to a waveguide.
//!
//! The crate computes the correlated part of two- and three-photon transport
//! through the array perturbatively in the coupling efficiency `beta`:
//!
//! - [`scatter`]: exact single-photon transmission/loss coefficients and the
//!   connected two- and three-photon S-matrices of a single emitter.
//! - [`diagrams`]: momentum-space amplitudes of the three-photon-connected
//!   transport diagrams (one three-photon vertex, two two-photon vertices,
//!   and the loop-order corrections with an internal momentum integral).
//! - [`wavefield`]: inverse Fourier transforms assembling the position-space
//!   correlated wavefunctions `phi2` and `phi3`, and the coherent-input
//!   wavefunctions `psi2`/`psi3`.
//! - [`correlators`]: normalized g2/g3, the connected third-order correlation
//!   `g3_connected`, Jacobi-coordinate grids and coincidence count rates.
//!
//! Everything here is `no_std` + `alloc`: pure functions of their inputs,
//! safe for unrestricted parallel invocation by a host crate.

#![no_std]

extern crate alloc;

pub mod correlators;
pub mod diagrams;
pub mod error;
pub mod grid;
pub mod params;
pub mod quad;
pub mod scatter;
pub mod wavefield;

pub use correlators::{CorrelationEvaluator, JacobiPoint};
pub use error::CoreError;
pub use grid::{CorrelationGrid, GridKind, Method};
pub use params::{EnsembleParams, Momentum};

/// Complex double-precision scalar used throughout.
pub type C64 = num_complex::Complex64;
