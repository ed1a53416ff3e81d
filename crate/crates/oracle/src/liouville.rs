//! The cascaded master equation of the driven chiral chain.
//!
//! Each atom couples to the forward waveguide mode at `Gamma = beta*gamma_tot`
//! and to its own loss channel at `gamma = (1-beta)*gamma_tot`; the resonant
//! coherent drive enters at atom 1 and every atom drives all atoms downstream
//! of it. With the on-resonance gauge (propagation phases removed) the
//! generator is
//!
//! ```text
//! d rho/dt = -i[H, rho] + D[c] rho + gamma sum_m D[sigma^-_m] rho
//! c = alpha + sqrt(Gamma) sum_m sigma^-_m
//! H = (1/2i) [ Gamma sum_{n<m} (sigma^+_m sigma^-_n - sigma^+_n sigma^-_m)
//!            + sqrt(Gamma) sum_m (alpha sigma^+_m - alpha^* sigma^-_m) ]
//! ```
//!
//! where `|alpha|^2 = P_in * gamma_tot` is the input photon flux. The
//! collective jump operator `c` is simultaneously the transmitted-field
//! annihilation operator of input-output theory; its coherent amplitude is
//! chosen so that the weak-drive transmission is `t0^M` per photon.

use triphoton_core::EnsembleParams;

use crate::hilbert::HilbertSpace;
use crate::sparse::{trace_product, Csr};
use crate::{OracleError, C64};

/// Sparse-component representation of the cascaded Liouvillian over the
/// `2^M` Hilbert space. The `4^M x 4^M` superoperator matrix is available
/// through [`LiouvilleOperator::dense_superoperator`] at small M.
#[derive(Debug, Clone)]
pub struct LiouvilleOperator {
    pub space: HilbertSpace,
    pub params: EnsembleParams,
    /// Non-Hermitian effective Hamiltonian `H - (i/2)(c^H c + gamma sum s+s-)`.
    h_nh: Csr,
    /// Transmitted-field operator `alpha + sqrt(Gamma) sum sigma^-`.
    c_out: Csr,
    c_dag: Csr,
    losses: Vec<Csr>,
    loss_rate: f64,
}

/// Builds the cascaded master equation for the given ensemble.
pub fn build_liouvillian(params: &EnsembleParams) -> Result<LiouvilleOperator, OracleError> {
    params
        .validate()
        .map_err(|e| OracleError::InvalidParams(e.to_string()))?;
    let space = HilbertSpace::new(params.num_atoms)?;
    let m = params.num_atoms;
    let dim = space.dim();
    let g_wg = params.waveguide_rate();
    let g_loss = params.loss_rate();
    let root = g_wg.sqrt();
    // alpha = i sqrt(flux) makes <c>/alpha = t0^M real positive at weak drive.
    let alpha = C64::new(0.0, (params.drive_power * params.gamma_tot).sqrt());

    let weights = vec![C64::new(root, 0.0); m as usize];
    let c_out = space.collective_lowering(&weights, alpha);
    let c_dag = c_out.dagger();

    // Assemble H and then H_nh = H - (i/2) c^H c - (i/2) gamma sum s+ s-.
    let mut dense_h = vec![C64::new(0.0, 0.0); dim * dim];
    let half_over_i = C64::new(0.0, -0.5); // 1/(2i)
    for mm in 0..m {
        for nn in 0..mm {
            let fwd = space.sigma_plus_minus(mm, nn).to_dense();
            let bwd = space.sigma_plus_minus(nn, mm).to_dense();
            for ((h, f), b) in dense_h.iter_mut().zip(&fwd).zip(&bwd) {
                *h += half_over_i * g_wg * (f - b);
            }
        }
        // drive terms: (1/2i) sqrt(Gamma) (alpha s+ - alpha^* s-)
        let lower = space.sigma_minus(mm);
        let sm = lower.to_dense();
        let sp = lower.dagger().to_dense();
        for ((h, p), s) in dense_h.iter_mut().zip(&sp).zip(&sm) {
            *h += half_over_i * root * (alpha * p - alpha.conj() * s);
        }
    }
    // c^H c and loss decay fold into the anti-Hermitian part.
    let chc = {
        let cd = c_dag.to_dense();
        let cc = c_out.to_dense();
        let mut out = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            for k in 0..dim {
                let a = cd[i * dim + k];
                if a != C64::new(0.0, 0.0) {
                    for j in 0..dim {
                        out[i * dim + j] += a * cc[k * dim + j];
                    }
                }
            }
        }
        out
    };
    let mut h_nh = dense_h;
    for (h, v) in h_nh.iter_mut().zip(&chc) {
        *h += C64::new(0.0, -0.5) * v;
    }
    for mm in 0..m {
        let proj = space.sigma_plus_minus(mm, mm).to_dense();
        for (h, p) in h_nh.iter_mut().zip(&proj) {
            *h += C64::new(0.0, -0.5 * g_loss) * p;
        }
    }
    let mut builder = crate::sparse::CooBuilder::new(dim);
    for r in 0..dim {
        for c in 0..dim {
            let v = h_nh[r * dim + c];
            if v.norm() > 0.0 {
                builder.push(r, c, v);
            }
        }
    }
    let h_nh = builder.build();
    let losses = (0..m).map(|mm| space.sigma_minus(mm)).collect();

    Ok(LiouvilleOperator {
        space,
        params: *params,
        h_nh,
        c_out,
        c_dag,
        losses,
        loss_rate: g_loss,
    })
}

impl LiouvilleOperator {
    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// Transmitted-field annihilation operator.
    pub fn output_op(&self) -> &Csr {
        &self.c_out
    }

    pub fn output_op_dag(&self) -> &Csr {
        &self.c_dag
    }

    /// `out = L(rho)`; `tmp` buffers of size `dim^2` each.
    pub fn apply(&self, rho: &[C64], out: &mut [C64], tmp: &mut [C64], tmp2: &mut [C64]) {
        let n = self.dim();
        debug_assert_eq!(rho.len(), n * n);
        // out = c rho c^H
        self.c_out.mul_dense(rho, tmp);
        self.c_out.mul_dense_left_dagger(tmp, out);
        // out += -i (H_nh rho - rho H_nh^H)
        self.h_nh.mul_dense(rho, tmp);
        for (o, t) in out.iter_mut().zip(tmp.iter()) {
            *o += C64::new(0.0, -1.0) * t;
        }
        self.h_nh.mul_dense_left_dagger(rho, tmp);
        for (o, t) in out.iter_mut().zip(tmp.iter()) {
            *o += C64::new(0.0, 1.0) * t;
        }
        // out += gamma sum_m s- rho s+
        for sm in &self.losses {
            sm.mul_dense(rho, tmp);
            sm.mul_dense_left_dagger(tmp, tmp2);
            for (o, t) in out.iter_mut().zip(tmp2.iter()) {
                *o += self.loss_rate * t;
            }
        }
    }

    /// Frobenius norm of `L^H(1)`, which vanishes identically for a
    /// trace-preserving generator.
    pub fn trace_preservation_residual(&self) -> f64 {
        let n = self.dim();
        // L^H(1) = i (H_nh^H - H_nh) + c^H c + gamma sum s+ s-
        let hd = self.h_nh.dagger().to_dense();
        let h = self.h_nh.to_dense();
        let mut acc = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n * n {
            acc[i] = C64::new(0.0, 1.0) * (hd[i] - h[i]);
        }
        let cd = self.c_dag.to_dense();
        let cc = self.c_out.to_dense();
        for i in 0..n {
            for k in 0..n {
                let a = cd[i * n + k];
                if a != C64::new(0.0, 0.0) {
                    for j in 0..n {
                        acc[i * n + j] += a * cc[k * n + j];
                    }
                }
            }
        }
        for sm in &self.losses {
            let d = sm.to_dense();
            // s+ s- = diag over excited states: (s-^H s-)
            for i in 0..n {
                for k in 0..n {
                    let a = d[k * n + i].conj();
                    if a != C64::new(0.0, 0.0) {
                        for j in 0..n {
                            acc[i * n + j] += self.loss_rate * a * d[k * n + j];
                        }
                    }
                }
            }
        }
        acc.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Mean output photon flux `<c^H c>` in the given state.
    pub fn output_flux(&self, rho: &[C64]) -> f64 {
        let n = self.dim();
        let mut tmp = vec![C64::new(0.0, 0.0); n * n];
        self.c_out.mul_dense(rho, &mut tmp);
        trace_product(&self.c_dag, &tmp).re
    }

    /// Dense `4^M x 4^M` superoperator in the column-stacking convention;
    /// intended for spectral checks at very small M.
    pub fn dense_superoperator(&self) -> Vec<C64> {
        let n = self.dim();
        let ns = n * n;
        assert!(ns <= 4096, "superoperator too large to densify");
        let mut sup = vec![C64::new(0.0, 0.0); ns * ns];
        let mut basis = vec![C64::new(0.0, 0.0); ns];
        let mut out = vec![C64::new(0.0, 0.0); ns];
        let mut t1 = vec![C64::new(0.0, 0.0); ns];
        let mut t2 = vec![C64::new(0.0, 0.0); ns];
        for col in 0..ns {
            basis.fill(C64::new(0.0, 0.0));
            basis[col] = C64::new(1.0, 0.0);
            self.apply(&basis, &mut out, &mut t1, &mut t2);
            for row in 0..ns {
                sup[row * ns + col] = out[row];
            }
        }
        sup
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(beta: f64, m: u32, p: f64) -> EnsembleParams {
        EnsembleParams { beta, num_atoms: m, gamma_tot: 1.0, drive_power: p }
    }

    #[test]
    fn capacity_error_propagates() {
        let p = params(0.05, 12, 0.0);
        assert!(matches!(
            build_liouvillian(&p),
            Err(OracleError::Capacity { requested: 12, .. })
        ));
    }

    #[test]
    fn trace_preserving() {
        for (beta, m, p) in [(0.05, 1, 0.0), (0.05, 2, 0.02), (0.3, 3, 0.5)] {
            let l = build_liouvillian(&params(beta, m, p)).unwrap();
            assert!(
                l.trace_preservation_residual() < 1e-12,
                "residual {:.2e} at beta={beta} M={m}",
                l.trace_preservation_residual()
            );
        }
    }

    #[test]
    fn undriven_atom_decays_to_ground() {
        let l = build_liouvillian(&params(0.05, 1, 0.0)).unwrap();
        // rho = |e><e| evolves toward |g><g|: check the generator's action
        let rho = [C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let mut out = [C64::new(0.0, 0.0); 4];
        let mut t1 = [C64::new(0.0, 0.0); 4];
        let mut t2 = [C64::new(0.0, 0.0); 4];
        l.apply(&rho, &mut out, &mut t1, &mut t2);
        // d rho_ee/dt = -Gamma_tot, d rho_gg/dt = +Gamma_tot
        assert!((out[3].re + 1.0).abs() < 1e-12);
        assert!((out[0].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_chain_is_static() {
        let l = build_liouvillian(&params(0.05, 0, 0.5)).unwrap();
        let rho = [C64::new(1.0, 0.0)];
        let mut out = [C64::new(0.0, 0.0)];
        let mut t1 = [C64::new(0.0, 0.0)];
        let mut t2 = [C64::new(0.0, 0.0)];
        l.apply(&rho, &mut out, &mut t1, &mut t2);
        assert!(out[0].norm() < 1e-14);
        assert!((l.output_flux(&rho) - 0.5).abs() < 1e-13);
    }
}
