use alloc::string::String;
use core::fmt::Write as _;

use crate::error::CoreError;

/// Physical description of the driven atomic ensemble.
///
/// All rates are angular-frequency quantities in the same unit system as
/// `gamma_tot`; internally every formula is expressed in ratios against
/// `gamma_tot`, so working in units where `gamma_tot = 1` is the common case.
/// `drive_power` is the input photon flux `P_in` in units of `gamma_tot`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleParams {
    /// Coupling efficiency beta into the waveguide mode, 0 < beta < 1.
    pub beta: f64,
    /// Number of atoms M in the array (M = 0 describes an empty waveguide).
    pub num_atoms: u32,
    /// Total single-atom decay rate.
    pub gamma_tot: f64,
    /// Input photon flux in units of `gamma_tot`.
    pub drive_power: f64,
}

impl EnsembleParams {
    pub fn new(beta: f64, num_atoms: u32, gamma_tot: f64, drive_power: f64) -> Result<Self, CoreError> {
        let p = Self { beta, num_atoms, gamma_tot, drive_power };
        p.validate()?;
        Ok(p)
    }

    /// Checks every invariant, reporting all violations at once.
    pub fn validate(&self) -> Result<(), CoreError> {
        let mut msg = String::new();
        if !(self.beta > 0.0 && self.beta < 1.0) || !self.beta.is_finite() {
            let _ = write!(msg, "beta must lie in (0, 1), got {}; ", self.beta);
        }
        if !(self.gamma_tot > 0.0) || !self.gamma_tot.is_finite() {
            let _ = write!(msg, "gamma_tot must be positive, got {}; ", self.gamma_tot);
        }
        if !(self.drive_power >= 0.0) || !self.drive_power.is_finite() {
            let _ = write!(msg, "drive_power must be non-negative, got {}; ", self.drive_power);
        }
        if msg.is_empty() { Ok(()) } else { Err(CoreError::InvalidParams(msg)) }
    }

    /// Waveguide decay rate Gamma = beta * gamma_tot.
    pub fn waveguide_rate(&self) -> f64 {
        self.beta * self.gamma_tot
    }

    /// Loss-channel decay rate gamma = (1 - beta) * gamma_tot.
    ///
    /// Computed so that `waveguide_rate() + loss_rate() == gamma_tot` exactly.
    pub fn loss_rate(&self) -> f64 {
        self.gamma_tot - self.waveguide_rate()
    }

    /// Optical depth OD = 4 * beta * M.
    pub fn optical_depth(&self) -> f64 {
        4.0 * self.beta * self.num_atoms as f64
    }

    /// Resonant single-atom transmission t0 = 1 - 2*beta (real).
    pub fn resonant_transmission(&self) -> f64 {
        1.0 - 2.0 * self.beta
    }

    /// True when the drive exceeds the weak-drive expansion scale
    /// `P_in/gamma_tot = O(beta)`; callers should warn but may proceed.
    pub fn exceeds_weak_drive(&self) -> bool {
        self.drive_power > self.beta
    }
}

/// Photon momentum, i.e. detuning from atomic resonance, in the same units
/// as `EnsembleParams::gamma_tot`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Momentum(pub f64);

impl From<f64> for Momentum {
    fn from(k: f64) -> Self {
        Momentum(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let p = EnsembleParams::new(0.05, 8, 1.0, 0.02).unwrap();
        assert_eq!(p.waveguide_rate(), 0.05);
        assert_eq!(p.waveguide_rate() + p.loss_rate(), p.gamma_tot);
        assert_eq!(p.optical_depth(), 1.6);
        assert_eq!(p.resonant_transmission(), 0.9);
        assert!(!p.exceeds_weak_drive());
        assert!(EnsembleParams::new(0.01, 85, 1.0, 0.06).unwrap().exceeds_weak_drive());
        assert!(EnsembleParams::new(0.05, 8, 1.0, 0.06).unwrap().exceeds_weak_drive());
    }

    #[test]
    fn rate_sum_exact_for_awkward_beta() {
        for &beta in &[0.1, 0.3, 1.0 / 3.0, 0.7, 1e-6, 0.999_999] {
            let p = EnsembleParams { beta, num_atoms: 3, gamma_tot: 2.7, drive_power: 0.0 };
            assert_eq!(p.waveguide_rate() + p.loss_rate(), p.gamma_tot);
        }
    }

    #[test]
    fn validation_reports_all_violations() {
        let err = EnsembleParams::new(1.5, 2, -1.0, -0.2).unwrap_err();
        let CoreError::InvalidParams(msg) = err else { panic!("wrong error kind") };
        assert!(msg.contains("beta"));
        assert!(msg.contains("gamma_tot"));
        assert!(msg.contains("drive_power"));
    }

    #[test]
    fn zero_atoms_is_valid() {
        assert!(EnsembleParams::new(0.05, 0, 1.0, 0.0).is_ok());
    }
}
