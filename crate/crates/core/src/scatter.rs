//! Single-emitter scattering data: elastic transmission/loss coefficients in
//! the propagating channel and the connected two- and three-photon S-matrices
//! of the even (fully coupled) channel.
//!
//! Conventions. Connected amplitudes are reported as densities multiplying a
//! total-momentum delta `2*pi*delta(sum p - sum k)`; momentum conservation is
//! enforced structurally by callers. The even-channel emitter interacts with
//! strength `gamma_tot`; the channel weights (powers of beta) are applied by
//! the diagram layer, not here.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use num_complex::Complex64 as C64;

use crate::params::{EnsembleParams, Momentum};

/// Connected S-matrix value together with the momenta it was evaluated at.
///
/// `value` is the amplitude density (units of inverse momentum for two
/// photons, inverse momentum squared for three). Bosonic symmetry under
/// separate permutations of `in_momenta` and `out_momenta` holds by
/// construction of the formulas.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectedAmplitude {
    pub value: C64,
    pub in_momenta: Vec<Momentum>,
    pub out_momenta: Vec<Momentum>,
}

#[inline]
fn lorentzian_pole(k: f64, gamma: f64) -> C64 {
    C64::new(k, 0.5 * gamma)
}

/// Resolvent factor G(z) = 1/(z + i*gamma/2) of the driven emitter.
#[inline]
pub(crate) fn resolvent(z: C64, gamma: f64) -> C64 {
    (z + C64::new(0.0, 0.5 * gamma)).inv()
}

/// k-space transmission coefficient t_k = 1 - i*beta*gamma_tot/(k + i*gamma_tot/2).
pub fn transmission(k: Momentum, p: &EnsembleParams) -> C64 {
    transmission_c(k.0.into(), p.beta, p.gamma_tot)
}

/// Transmission coefficient continued to complex momentum; analytic away
/// from the pole at `k = -i*gamma/2`.
#[inline]
pub(crate) fn transmission_c(k: C64, beta: f64, gamma: f64) -> C64 {
    C64::new(1.0, 0.0) - C64::new(0.0, beta * gamma) / (k + C64::new(0.0, 0.5 * gamma))
}

/// Loss-channel amplitude r_k = -sqrt(beta(1-beta)) * i*gamma_tot/(k + i*gamma_tot/2).
///
/// Together with `transmission` it satisfies |t_k|^2 + |r_k|^2 = 1 for all
/// real k (single-excitation unitarity across the two channels).
pub fn reflection(k: Momentum, p: &EnsembleParams) -> C64 {
    let root = (p.beta * (1.0 - p.beta)).sqrt();
    -C64::new(0.0, root * p.gamma_tot) / lorentzian_pole(k.0, p.gamma_tot)
}

/// Connected two-photon S-matrix density of the even channel,
///
/// ```text
/// s2(p1,p2;k1,k2) = i*gamma^2 (E + i*gamma) / [(k1+ig/2)(k2+ig/2)(p1+ig/2)(p2+ig/2)]
/// ```
///
/// with `E = k1 + k2` and `g = gamma_tot`. The caller is responsible for
/// the on-shell condition `p1 + p2 = k1 + k2`.
pub(crate) fn s2_density(p1: f64, p2: f64, k1: f64, k2: f64, gamma: f64) -> C64 {
    s2_density_c(p1.into(), p2.into(), k1.into(), k2.into(), gamma)
}

/// [`s2_density`] continued to complex momenta.
#[inline]
pub(crate) fn s2_density_c(p1: C64, p2: C64, k1: C64, k2: C64, gamma: f64) -> C64 {
    let ig2 = C64::new(0.0, 0.5 * gamma);
    let e = k1 + k2 + C64::new(0.0, gamma);
    let denom = (k1 + ig2) * (k2 + ig2) * (p1 + ig2) * (p2 + ig2);
    C64::new(0.0, gamma * gamma) * e / denom
}

/// Connected three-photon S-matrix density of the even channel for general
/// incoming and outgoing momenta,
///
/// ```text
/// s3(p;k) = -(2i/3)*gamma^3 * G(k1)G(k2)G(k3)
///           * sum_c sum_{i != j} G(p_i + p_j - k_c) G(p_j)
/// ```
///
/// where `G(z) = 1/(z + i*gamma/2)`, `c` runs over the incoming momenta and
/// `(i, j)` over ordered pairs of outgoing ones. On the resonant slice
/// `k = (0,0,0)` this reduces to [`s3_resonant_in`].
pub(crate) fn s3_density(pv: [f64; 3], kv: [f64; 3], gamma: f64) -> C64 {
    let gk: C64 = kv
        .iter()
        .map(|&k| resolvent(C64::new(k, 0.0), gamma))
        .product();
    let gp: [C64; 3] = core::array::from_fn(|j| resolvent(C64::new(pv[j], 0.0), gamma));
    let mut pair_sum = C64::new(0.0, 0.0);
    for &kc in &kv {
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let chain = resolvent(C64::new(pv[i] + pv[j] - kc, 0.0), gamma);
                    pair_sum += chain * gp[j];
                }
            }
        }
    }
    C64::new(0.0, -2.0 * gamma.powi(3) / 3.0) * gk * pair_sum
}

/// Connected three-photon density for resonant incoming photons,
///
/// ```text
/// s3(p;0,0,0) = -4*gamma^2 (3*gamma^2/2 + p1^2 + p2^2 + p3^2)
///               / prod_j (gamma^2/4 + p_j^2)
/// ```
///
/// Real-valued for real outgoing momenta; reference form for tests, with
/// [`s3_resonant_c`] carrying the same expression into the complex plane.
#[cfg_attr(not(test), allow(dead_code))]
#[inline]
pub(crate) fn s3_resonant_in(p1: f64, p2: f64, p3: f64, gamma: f64) -> f64 {
    let g2 = gamma * gamma;
    let q = 0.25 * g2;
    let num = -4.0 * g2 * (1.5 * g2 + p1 * p1 + p2 * p2 + p3 * p3);
    num / ((q + p1 * p1) * (q + p2 * p2) * (q + p3 * p3))
}

/// [`s3_resonant_in`] continued to complex outgoing momenta.
#[inline]
pub(crate) fn s3_resonant_c(p: [C64; 3], gamma: f64) -> C64 {
    let g2 = gamma * gamma;
    let q = C64::new(0.25 * g2, 0.0);
    let (s1, s2, s3) = (p[0] * p[0], p[1] * p[1], p[2] * p[2]);
    let num = (s1 + s2 + s3 + 1.5 * g2) * (-4.0 * g2);
    num / ((q + s1) * (q + s2) * (q + s3))
}

/// Connected two-photon S-matrix of a single emitter.
///
/// Callers must enforce `p1 + p2 = k1 + k2`; the reported value is the
/// density multiplying the momentum-conserving delta.
pub fn connected_s2(
    p1: Momentum,
    p2: Momentum,
    k1: Momentum,
    k2: Momentum,
    params: &EnsembleParams,
) -> ConnectedAmplitude {
    ConnectedAmplitude {
        value: s2_density(p1.0, p2.0, k1.0, k2.0, params.gamma_tot),
        in_momenta: vec![k1, k2],
        out_momenta: vec![p1, p2],
    }
}

/// Connected three-photon S-matrix of a single emitter; conventions as in
/// [`connected_s2`].
pub fn connected_s3(
    p: [Momentum; 3],
    k: [Momentum; 3],
    params: &EnsembleParams,
) -> ConnectedAmplitude {
    ConnectedAmplitude {
        value: s3_density(
            [p[0].0, p[1].0, p[2].0],
            [k[0].0, k[1].0, k[2].0],
            params.gamma_tot,
        ),
        in_momenta: k.to_vec(),
        out_momenta: p.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::SmallRng;
    use rand::{Rng, SeedableRng};

    fn params(beta: f64) -> EnsembleParams {
        EnsembleParams { beta, num_atoms: 1, gamma_tot: 1.0, drive_power: 0.0 }
    }

    #[test]
    fn resonant_transmission_value() {
        let t = transmission(Momentum(0.0), &params(0.05));
        assert!((t - C64::new(0.9, 0.0)).norm() < 1e-15);
        assert_eq!(t.im, 0.0);
    }

    #[test]
    fn far_detuned_transmission_is_unity() {
        for &k in &[1e7, -1e7, 3e9] {
            let t = transmission(Momentum(k), &params(0.4));
            assert!((t - C64::new(1.0, 0.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn transmission_off_resonance_direct_arithmetic() {
        // k = gamma/2, beta = 0.01: evaluate the defining formula through an
        // independent real/imaginary decomposition.
        let (k, beta, gamma) = (0.5, 0.01, 1.0);
        let t = transmission(Momentum(k), &params(beta));
        // 1 - i*b*g/(k + i*g/2) = 1 - i*b*g*(k - i*g/2)/(k^2 + g^2/4)
        let d = k * k + 0.25 * gamma * gamma;
        let expect = C64::new(1.0 - beta * gamma * (0.5 * gamma) / d, -beta * gamma * k / d);
        assert!((t - expect).norm() < 1e-15);
        let r = reflection(Momentum(k), &params(beta));
        assert!((t.norm_sqr() + r.norm_sqr() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn resonant_reflection_value() {
        let r = reflection(Momentum(0.0), &params(0.05));
        let expect = -2.0 * (0.05f64 * 0.95).sqrt();
        assert!((r - C64::new(expect, 0.0)).norm() < 1e-15);
        assert!((r.re + 0.435_889_894_354).abs() < 1e-9);
    }

    #[test]
    fn decoupled_limit_no_reflection() {
        let r = reflection(Momentum(0.0), &params(1e-300));
        assert!(r.norm() < 1e-140);
    }

    #[test]
    fn unitarity_across_random_grid() {
        let mut rng = SmallRng::seed_from_u64(7);
        let p = params(0.03);
        let mut worst = 0.0f64;
        for _ in 0..2000 {
            let k = Momentum(rng.random_range(-50.0..50.0));
            let t = transmission(k, &p);
            let r = reflection(k, &p);
            worst = worst.max((t.norm_sqr() + r.norm_sqr() - 1.0).abs());
        }
        assert!(worst < 1e-13, "worst unitarity defect {worst:.2e}");
    }

    #[test]
    fn conjugation_under_momentum_reversal() {
        let p = params(0.11);
        for &k in &[0.3, 1.7, -4.2] {
            assert_eq!(transmission(Momentum(-k), &p), transmission(Momentum(k), &p).conj());
            assert_eq!(reflection(Momentum(-k), &p), reflection(Momentum(k), &p).conj());
        }
    }

    #[test]
    fn s2_bosonic_symmetry_exact() {
        let p = params(0.05);
        let (p1, p2, k1, k2) = (Momentum(0.7), Momentum(-1.3), Momentum(-0.35), Momentum(-0.25));
        let a = connected_s2(p1, p2, k1, k2, &p).value;
        let b = connected_s2(p2, p1, k1, k2, &p).value;
        let c = connected_s2(p1, p2, k2, k1, &p).value;
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn s2_all_resonant_value() {
        // i*g^2*(i*g)*G(0)^4 with G(0) = -2i/g gives -16/g.
        let v = s2_density(0.0, 0.0, 0.0, 0.0, 1.0);
        assert!((v - C64::new(-16.0, 0.0)).norm() < 1e-12);
        let v2 = s2_density(0.0, 0.0, 0.0, 0.0, 2.0);
        assert!((v2 - C64::new(-8.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn s2_scaling_inverse_momentum() {
        let mut rng = SmallRng::seed_from_u64(11);
        for _ in 0..50 {
            let s: f64 = rng.random_range(0.1..10.0);
            let (p1, k1, k2) = (
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            );
            let p2 = k1 + k2 - p1;
            let base = s2_density(p1, p2, k1, k2, 1.0);
            let scaled = s2_density(s * p1, s * p2, s * k1, s * k2, s);
            assert!((scaled * s - base).norm() < 1e-12 * base.norm());
        }
    }

    #[test]
    fn s3_general_matches_resonant_slice() {
        // The general six-resolvent form must collapse to the closed real
        // rational function when all incoming momenta vanish.
        let mut rng = SmallRng::seed_from_u64(13);
        for _ in 0..200 {
            let p1 = rng.random_range(-4.0..4.0);
            let p2 = rng.random_range(-4.0..4.0);
            let p3 = -p1 - p2;
            for &gamma in &[1.0, 2.5] {
                let gen = s3_density([p1, p2, p3], [0.0; 3], gamma);
                let slice = s3_resonant_in(p1, p2, p3, gamma);
                assert!(
                    (gen - C64::new(slice, 0.0)).norm() < 1e-11 * slice.abs().max(1.0),
                    "mismatch at ({p1},{p2},{p3}), gamma={gamma}: {gen} vs {slice}"
                );
            }
        }
    }

    #[test]
    fn s3_full_permutation_symmetry() {
        let mut rng = SmallRng::seed_from_u64(17);
        let perms: [[usize; 3]; 6] =
            [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for _ in 0..40 {
            let k = [
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            ];
            let p0 = rng.random_range(-2.0..2.0);
            let p1 = rng.random_range(-2.0..2.0);
            let p = [p0, p1, k[0] + k[1] + k[2] - p0 - p1];
            let base = s3_density(p, k, 1.0);
            for perm in perms {
                let pp = [p[perm[0]], p[perm[1]], p[perm[2]]];
                let kk = [k[perm[0]], k[perm[1]], k[perm[2]]];
                assert!((s3_density(pp, k, 1.0) - base).norm() < 1e-12 * base.norm());
                assert!((s3_density(p, kk, 1.0) - base).norm() < 1e-12 * base.norm());
            }
        }
    }

    #[test]
    fn s3_finite_and_negative_at_origin() {
        let v = s3_resonant_in(0.0, 0.0, 0.0, 1.0);
        assert!((v + 384.0).abs() < 1e-9);
        let g = s3_density([0.0; 3], [0.0; 3], 1.0);
        assert!((g - C64::new(-384.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn s3_scaling_inverse_momentum_squared() {
        let mut rng = SmallRng::seed_from_u64(19);
        for _ in 0..50 {
            let s: f64 = rng.random_range(0.2..5.0);
            let k = [
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            ];
            let p0 = rng.random_range(-2.0..2.0);
            let p1 = rng.random_range(-2.0..2.0);
            let p = [p0, p1, k[0] + k[1] + k[2] - p0 - p1];
            let base = s3_density(p, k, 1.0);
            let scaled = s3_density(
                [s * p[0], s * p[1], s * p[2]],
                [s * k[0], s * k[1], s * k[2]],
                s,
            );
            assert!((scaled * s * s - base).norm() < 1e-11 * base.norm());
        }
    }
}
