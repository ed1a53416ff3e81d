//! Reference solver for the chirally coupled atom chain: the cascaded master
//! equation for M two-level atoms driven through one end of a unidirectional
//! waveguide, its steady state, and second-/third-order output correlations
//! via the quantum regression theorem.
//!
//! This crate is the independent ground truth the diagrammatic expansion in
//! `triphoton-core` is benchmarked against. It works at the density-matrix
//! level (dimension `2^M`, hard cap M = 11) with sparse operators, never
//! materializing the `4^M` superoperator except optionally at very small M
//! for spectral checks.

pub mod eig;
pub mod hilbert;
pub mod liouville;
pub mod qrt;
pub mod sparse;
pub mod steady;

pub use hilbert::HilbertSpace;
pub use liouville::{build_liouvillian, LiouvilleOperator};
pub use qrt::{output_field_ops, qrt_g2, qrt_g3, qrt_g3_connected, OutputFieldOps};
pub use steady::{steady_state, SteadyState};

use thiserror::Error;

/// Largest atom number the exact solver accepts.
pub const MAX_ATOMS: u32 = 11;

pub type C64 = num_complex::Complex64;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("atom number {requested} exceeds the exact-solver capacity {cap}")]
    Capacity { requested: u32, cap: u32 },

    #[error("time integration failed: {0}")]
    Integration(String),

    #[error("steady state did not converge: residual {residual:.3e} above {tolerance:.3e} at t = {t:.1}")]
    NonStationary { residual: f64, tolerance: f64, t: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}
