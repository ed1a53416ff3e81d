//! Normalized correlation functions of the transmitted light and the
//! experiment-facing quantities built from them.
//!
//! In the weak-drive regime the normalized correlators reduce to ratios of
//! the coherent-input wavefunctions,
//!
//! ```text
//! g2(x1,x2)    = |psi2|^2 / t0^(4M),
//! g3(x1,x2,x3) = |psi3|^2 / t0^(6M),
//! g3c          = 2 + g3 - sum_{i<j} g2(x_i, x_j),
//! ```
//!
//! `g3c` vanishes for Gaussian light and when one photon is far from the
//! other two, so any nonzero value certifies non-Gaussian correlations.

use alloc::vec::Vec;

use num_traits::Float;

use crate::error::CoreError;
use crate::grid::{linspace, CorrelationGrid, GridKind, Method};
use crate::params::EnsembleParams;
use crate::quad::Rule;
use crate::wavefield::{LoopMode, NumericsConfig, WavefieldEvaluator};

/// Jacobi coordinates separating the photon-triple center of mass `R` from
/// the relative arrival times `(eta, zeta)`:
///
/// ```text
/// R    = (x1 + x2 + x3) / sqrt(3)
/// eta  = (x1 - x2) / sqrt(2)
/// zeta = sqrt(2/3) ((x1 + x2)/2 - x3)
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiPoint {
    pub r: f64,
    pub eta: f64,
    pub zeta: f64,
}

impl JacobiPoint {
    pub fn from_positions(x: [f64; 3]) -> Self {
        let r = (x[0] + x[1] + x[2]) / 3.0f64.sqrt();
        let eta = (x[0] - x[1]) / 2.0f64.sqrt();
        let zeta = (2.0f64 / 3.0).sqrt() * (0.5 * (x[0] + x[1]) - x[2]);
        Self { r, eta, zeta }
    }

    /// Inverse map: positions realizing this Jacobi point. Solves the
    /// defining relations
    /// `x1 + x2 + x3 = sqrt(3) R`, `x1 - x2 = sqrt(2) eta`,
    /// `(x1 + x2)/2 - x3 = sqrt(3/2) zeta`.
    pub fn to_positions(self) -> [f64; 3] {
        let total = 3.0f64.sqrt() * self.r;
        let pair = (2.0 * total + 2.0 * (1.5f64).sqrt() * self.zeta) / 3.0;
        let x3 = total - pair;
        let d = 2.0f64.sqrt() * self.eta;
        let x1 = 0.5 * (pair + d);
        let x2 = 0.5 * (pair - d);
        [x1, x2, x3]
    }
}

/// Evaluator for the normalized correlators of one scenario.
pub struct CorrelationEvaluator {
    wavefield: WavefieldEvaluator,
    /// When set, the connected amplitudes are forced to zero; the output
    /// then describes Gaussian (coherent) light exactly.
    force_gaussian: bool,
}

impl CorrelationEvaluator {
    pub fn new(
        params: EnsembleParams,
        numerics: NumericsConfig,
        loop_mode: LoopMode,
    ) -> Result<Self, CoreError> {
        let wavefield = WavefieldEvaluator::new(params, numerics, loop_mode)?;
        Ok(Self { wavefield, force_gaussian: false })
    }

    /// Null-test configuration: keep the parameter set but drop every
    /// connected amplitude.
    pub fn gaussian_reference(mut self) -> Self {
        self.force_gaussian = true;
        self
    }

    pub fn params(&self) -> &EnsembleParams {
        self.wavefield.params()
    }

    pub fn wavefield(&self) -> &WavefieldEvaluator {
        &self.wavefield
    }

    fn phi2_n(&self, x1: f64, x2: f64) -> Result<f64, CoreError> {
        if self.force_gaussian {
            return Ok(0.0);
        }
        self.wavefield.phi2_normalized(x1, x2)
    }

    fn phi3_n(&self, x1: f64, x2: f64, x3: f64) -> Result<f64, CoreError> {
        if self.force_gaussian {
            return Ok(0.0);
        }
        self.wavefield.phi3_normalized(x1, x2, x3)
    }

    /// Normalized second-order correlation `|t0^2M + phi2|^2 / t0^4M`.
    pub fn g2(&self, x1: f64, x2: f64) -> Result<f64, CoreError> {
        let a = 1.0 + self.phi2_n(x1, x2)?;
        Ok(a * a)
    }

    /// Normalized third-order correlation `|psi3|^2 / t0^6M`.
    pub fn g3(&self, x1: f64, x2: f64, x3: f64) -> Result<f64, CoreError> {
        let pairs = self.phi2_n(x1, x2)? + self.phi2_n(x1, x3)? + self.phi2_n(x2, x3)?;
        let a = 1.0 + pairs + self.phi3_n(x1, x2, x3)?;
        Ok(a * a)
    }

    /// Connected third-order correlation
    /// `g3c = 2 + g3 - g2(x1,x2) - g2(x1,x3) - g2(x2,x3)`.
    pub fn g3_connected(&self, x1: f64, x2: f64, x3: f64) -> Result<f64, CoreError> {
        Ok(2.0 + self.g3(x1, x2, x3)?
            - self.g2(x1, x2)?
            - self.g2(x1, x3)?
            - self.g2(x2, x3)?)
    }

    /// Unnormalized connected correlation
    /// `G3c = g3c * (P_in t0^(2M))^3` in units of `gamma_tot^3`.
    pub fn g3_connected_unnormalized(&self, x1: f64, x2: f64, x3: f64) -> Result<f64, CoreError> {
        let p = self.params();
        let flux = p.drive_power * crate::wavefield::t0_pow(p.resonant_transmission(), 2 * p.num_atoms);
        Ok(self.g3_connected(x1, x2, x3)? * flux.powi(3))
    }

    /// `g3c` over the `(eta, zeta)` plane at center of mass `R = 0`.
    ///
    /// Coordinates are in units of `1/gamma_tot`; the grid has `n` points
    /// per axis over the closed ranges.
    pub fn jacobi_grid(
        &self,
        eta_range: (f64, f64),
        zeta_range: (f64, f64),
        n: usize,
    ) -> Result<CorrelationGrid, CoreError> {
        assert!(n >= 2, "grid resolution must be at least 2");
        let g = self.params().gamma_tot;
        let etas = linspace(eta_range.0, eta_range.1, n);
        let zetas = linspace(zeta_range.0, zeta_range.1, n);
        let mut values = Vec::with_capacity(n * n);
        for &eta in &etas {
            for &zeta in &zetas {
                let x = JacobiPoint { r: 0.0, eta: eta / g, zeta: zeta / g }.to_positions();
                values.push(self.g3_connected(x[0], x[1], x[2])?);
            }
        }
        Ok(CorrelationGrid::new(
            GridKind::G3Connected,
            Method::Diagrammatic,
            *self.params(),
            alloc::vec![etas, zetas],
            values,
        ))
    }

    /// `g3c(t1, t2, 0)` on an `n x n` grid over `[0, t_max]^2`
    /// (times in units of `1/gamma_tot`).
    pub fn time_grid(&self, kind: GridKind, t_max: f64, n: usize) -> Result<CorrelationGrid, CoreError> {
        assert!(n >= 2, "grid resolution must be at least 2");
        let g = self.params().gamma_tot;
        let ts = linspace(0.0, t_max, n);
        let mut values = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let (t1, t2) = (ts[i] / g, ts[j] / g);
                let v = match kind {
                    GridKind::G2 => self.g2(t1, t2)?,
                    GridKind::G3 => self.g3(t1, t2, 0.0)?,
                    GridKind::G3Connected => self.g3_connected(t1, t2, 0.0)?,
                    GridKind::G3ConnectedUnnormalized => {
                        self.g3_connected_unnormalized(t1, t2, 0.0)?
                    }
                };
                // g2 depends on |t1 - t2| and the three-photon kinds are
                // exchange symmetric, so mirroring is exact.
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Ok(CorrelationGrid::new(
            kind,
            Method::Diagrammatic,
            *self.params(),
            alloc::vec![ts.clone(), ts],
            values,
        ))
    }

    /// Coincidence count rate: the window integral
    /// `S = int_0^w dt1 dt2 |G3c(t1, t2, 0)|` converted to Hz through the
    /// physical decay rate `gamma_tot_hz` (angular, 1/s). The window `w` is
    /// in units of `1/gamma_tot`.
    pub fn count_rate(&self, gamma_tot_hz: f64, window: f64) -> Result<f64, CoreError> {
        assert!(window > 0.0, "window must be positive");
        assert!(gamma_tot_hz > 0.0, "gamma_tot_hz must be positive");
        let g = self.params().gamma_tot;
        let rule = Rule::finite(0.0, window, 5, 8);
        let n = rule.len();
        // g3c is exchange symmetric: evaluate the upper triangle only.
        let mut vals = alloc::vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.g3_connected_unnormalized(rule.nodes[i] / g, rule.nodes[j] / g, 0.0)?;
                vals[i * n + j] = v;
                vals[j * n + i] = v;
            }
        }
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += rule.weights[i] * rule.weights[j] * vals[i * n + j].abs();
            }
        }
        Ok(acc * gamma_tot_hz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(beta: f64, m: u32, power: f64) -> CorrelationEvaluator {
        let params = EnsembleParams { beta, num_atoms: m, gamma_tot: 1.0, drive_power: power };
        CorrelationEvaluator::new(params, NumericsConfig::default(), LoopMode::Off).unwrap()
    }

    #[test]
    fn jacobi_map_examples() {
        let j = JacobiPoint::from_positions([1.0, 1.0, 1.0]);
        assert!((j.r - 3.0f64.sqrt()).abs() < 1e-15);
        assert!(j.eta.abs() < 1e-15);
        assert!(j.zeta.abs() < 1e-15);

        let x = JacobiPoint { r: 0.0, eta: 0.0, zeta: 0.0 }.to_positions();
        assert_eq!(x, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn jacobi_roundtrip() {
        for &(x1, x2, x3) in &[(0.3, -1.2, 2.0), (5.0, 0.1, -0.4)] {
            let j = JacobiPoint::from_positions([x1, x2, x3]);
            let x = j.to_positions();
            assert!((x[0] - x1).abs() < 1e-12);
            assert!((x[1] - x2).abs() < 1e-12);
            assert!((x[2] - x3).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_waveguide_is_coherent() {
        let ev = eval(0.05, 0, 0.02);
        assert_eq!(ev.g2(0.0, 1.0).unwrap(), 1.0);
        assert_eq!(ev.g3(0.0, 1.0, 2.0).unwrap(), 1.0);
        assert_eq!(ev.g3_connected(0.0, 1.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_reference_null() {
        let ev = eval(0.05, 4, 0.02).gaussian_reference();
        for &(a, b, c) in &[(0.0, 0.0, 0.0), (1.0, 0.5, 0.2)] {
            assert_eq!(ev.g3_connected(a, b, c).unwrap(), 0.0);
        }
    }

    #[test]
    fn g2_decorrelates_at_large_separation() {
        let ev = eval(0.05, 2, 0.02);
        let v = ev.g2(0.0, 40.0).unwrap();
        assert!((v - 1.0).abs() < 1e-3, "g2(40) = {v}");
    }

    #[test]
    fn g3_factorizes_when_one_photon_leaves() {
        let ev = eval(0.05, 2, 0.02);
        let g3 = ev.g3(0.4, 1.0, 40.0).unwrap();
        let g2 = ev.g2(0.4, 1.0).unwrap();
        assert!((g3 - g2).abs() < 1e-3, "g3 = {g3}, g2 = {g2}");
        let g3c = ev.g3_connected(0.4, 1.0, 40.0).unwrap();
        assert!(g3c.abs() < 1e-3);
    }

    #[test]
    fn g3c_sign_at_coincidence_follows_optical_depth() {
        // OD = 0.4 anticorrelated, OD = 1.6 correlated at the origin.
        let lo = CorrelationEvaluator::new(
            EnsembleParams { beta: 0.05, num_atoms: 2, gamma_tot: 1.0, drive_power: 0.02 },
            NumericsConfig::default(),
            LoopMode::Auto,
        )
        .unwrap();
        assert!(lo.g3_connected(0.0, 0.0, 0.0).unwrap() < 0.0);
        let hi = CorrelationEvaluator::new(
            EnsembleParams { beta: 0.05, num_atoms: 8, gamma_tot: 1.0, drive_power: 0.06 },
            NumericsConfig::default(),
            LoopMode::Auto,
        )
        .unwrap();
        assert!(hi.g3_connected(0.0, 0.0, 0.0).unwrap() > 0.0);
    }

    #[test]
    fn singular_normalization_rejected() {
        let params = EnsembleParams { beta: 0.5, num_atoms: 2, gamma_tot: 1.0, drive_power: 0.02 };
        let ev = CorrelationEvaluator::new(params, NumericsConfig::default(), LoopMode::Off).unwrap();
        assert!(matches!(
            ev.g2(0.0, 1.0),
            Err(CoreError::SingularNormalization { .. })
        ));
    }

    #[test]
    fn jacobi_grid_center_and_exchange_symmetry() {
        let ev = eval(0.05, 2, 0.02);
        let grid = ev.jacobi_grid((-2.0, 2.0), (-2.0, 2.0), 9).unwrap();
        // eta -> -eta is photon 1 <-> 2 exchange; rows mirror exactly.
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(grid.at(i, j), grid.at(8 - i, j), "eta mirror broke at ({i},{j})");
            }
        }
        let center = grid.at(4, 4);
        let coincidence = ev.g3_connected(0.0, 0.0, 0.0).unwrap();
        assert!((center - coincidence).abs() < 1e-12);
    }

    #[test]
    fn time_grid_symmetric_and_decaying() {
        let ev = eval(0.05, 2, 0.02);
        let grid = ev.time_grid(GridKind::G3Connected, 5.0, 11).unwrap();
        for i in 0..11 {
            for j in 0..11 {
                assert_eq!(grid.at(i, j), grid.at(j, i));
            }
        }
        assert!(grid.at(0, 0).abs() > grid.at(10, 10).abs());
    }

    #[test]
    fn count_rate_cubic_in_drive() {
        let slow = eval(0.05, 2, 0.02);
        let fast = eval(0.05, 2, 0.04);
        let s1 = slow.count_rate(1.0, 3.0).unwrap();
        let s2 = fast.count_rate(1.0, 3.0).unwrap();
        assert!(((s2 / s1) - 8.0).abs() < 1e-9, "ratio = {}", s2 / s1);
        assert!(s1 > 0.0);
    }
}
