//! Time propagation of the master equation and the stationary state.
//!
//! The density matrix is evolved with an adaptive Dormand-Prince 5(4) pair.
//! The steady state is reached by long-time integration from the ground
//! state (the slowest relaxation rate of the cascaded chain is of order
//! `gamma_tot/2`, so the approach is exponential) and certified by the
//! stationarity residual `|L(rho)|_F`.


use crate::eig::is_positive_semidefinite;
use crate::liouville::LiouvilleOperator;
use crate::sparse::trace;
use crate::{OracleError, C64};

/// Butcher tableau of the Dormand-Prince 5(4) pair.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Workspace for repeated propagation of one Liouvillian.
pub struct Propagator<'a> {
    op: &'a LiouvilleOperator,
    k: Vec<Vec<C64>>,
    stage: Vec<C64>,
    tmp1: Vec<C64>,
    tmp2: Vec<C64>,
    rtol: f64,
    atol: f64,
}

impl<'a> Propagator<'a> {
    pub fn new(op: &'a LiouvilleOperator) -> Self {
        let ns = op.dim() * op.dim();
        Self {
            op,
            k: (0..7).map(|_| vec![C64::new(0.0, 0.0); ns]).collect(),
            stage: vec![C64::new(0.0, 0.0); ns],
            tmp1: vec![C64::new(0.0, 0.0); ns],
            tmp2: vec![C64::new(0.0, 0.0); ns],
            rtol: 1e-10,
            atol: 1e-12,
        }
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    /// Advances `rho` by `span` in place.
    pub fn advance(&mut self, rho: &mut [C64], span: f64) -> Result<(), OracleError> {
        if span == 0.0 {
            return Ok(());
        }
        assert!(span > 0.0, "propagation runs forward");
        let Self { op, k, stage, tmp1, tmp2, rtol, atol } = self;
        let op = *op;
        let g = op.params.gamma_tot;
        let mut t = 0.0;
        let mut h = (0.1 / g).min(span);
        op.apply(rho, &mut k[0], tmp1, tmp2);
        let mut steps = 0usize;
        while t < span {
            steps += 1;
            if steps > 2_000_000 {
                return Err(OracleError::Integration("step count exceeded".into()));
            }
            if t + h > span {
                h = span - t;
            }
            for s in 1..7 {
                stage.copy_from_slice(rho);
                for (j, row) in A[s - 1].iter().enumerate().take(s) {
                    if *row != 0.0 {
                        for (st, kk) in stage.iter_mut().zip(&k[j]) {
                            *st += h * row * kk;
                        }
                    }
                }
                let (head, tail) = k.split_at_mut(s);
                let _ = head;
                op.apply(stage, &mut tail[0], tmp1, tmp2);
            }
            // error estimate: |(b5 - b4) . k| scaled
            let mut err: f64 = 0.0;
            for i in 0..rho.len() {
                let mut y5 = rho[i];
                let mut diff = C64::new(0.0, 0.0);
                for (s, kk) in k.iter().enumerate() {
                    y5 += h * B5[s] * kk[i];
                    diff += h * (B5[s] - B4[s]) * kk[i];
                }
                let sc = *atol + *rtol * y5.norm().max(rho[i].norm());
                err += (diff.norm() / sc).powi(2);
            }
            let err = (err / rho.len() as f64).sqrt();
            if err <= 1.0 {
                for i in 0..rho.len() {
                    for (s, kk) in k.iter().enumerate().take(6) {
                        if B5[s] != 0.0 {
                            rho[i] += h * B5[s] * kk[i];
                        }
                    }
                }
                t += h;
                // the last stage sits at the accepted solution (FSAL)
                let (first, rest) = k.split_at_mut(1);
                first[0].copy_from_slice(&rest[5]);
            }
            let factor = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
            h *= factor.clamp(0.2, 5.0);
            h = h.min(50.0 / g);
            if h < 1e-12 / g {
                return Err(OracleError::Integration(format!(
                    "step size collapsed at t = {t:.3e}"
                )));
            }
        }
        Ok(())
    }
}

/// Stationary density matrix with its certification data.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: Vec<C64>,
    pub dim: usize,
    /// Frobenius norm of `L(rho)`.
    pub residual: f64,
}

impl SteadyState {
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.rho[i * n + j] - self.rho[j * n + i].conj()).norm());
            }
        }
        worst
    }

    pub fn trace_defect(&self) -> f64 {
        (trace(&self.rho, self.dim) - C64::new(1.0, 0.0)).norm()
    }

    /// Certifies `min eigenvalue >= -shift` through a Cholesky attempt on
    /// the Hermitian part.
    pub fn is_positive_semidefinite(&self, shift: f64) -> bool {
        let n = self.dim;
        let mut herm = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                herm[i * n + j] = 0.5 * (self.rho[i * n + j] + self.rho[j * n + i].conj());
            }
        }
        is_positive_semidefinite(&herm, n, shift)
    }
}

/// Integrates from the ground state until the stationarity residual drops
/// below `tolerance` (Frobenius norm of the generator action).
pub fn steady_state(op: &LiouvilleOperator, tolerance: f64) -> Result<SteadyState, OracleError> {
    let n = op.dim();
    let ns = n * n;
    let g = op.params.gamma_tot;
    let mut rho = vec![C64::new(0.0, 0.0); ns];
    rho[0] = C64::new(1.0, 0.0); // all atoms in the ground state
    let mut prop = Propagator::new(op);
    let mut out = vec![C64::new(0.0, 0.0); ns];
    let mut t1 = vec![C64::new(0.0, 0.0); ns];
    let mut t2 = vec![C64::new(0.0, 0.0); ns];
    let mut t = 0.0;
    let span = 20.0 / g;
    let t_max = 400.0 / g;
    loop {
        prop.advance(&mut rho, span)?;
        t += span;
        // renormalize the trace against integrator drift
        let tr = trace(&rho, n).re;
        for v in rho.iter_mut() {
            *v /= tr;
        }
        op.apply(&rho, &mut out, &mut t1, &mut t2);
        let residual = out.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if residual < tolerance {
            return Ok(SteadyState { rho, dim: n, residual });
        }
        if t >= t_max {
            return Err(OracleError::NonStationary { residual, tolerance, t });
        }
    }
}
