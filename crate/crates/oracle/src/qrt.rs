//! Output-field correlation functions via the quantum regression theorem:
//! detection operators applied to the stationary state, propagated by the
//! same master equation between detection times.

use rayon::prelude::*;

use triphoton_core::{CorrelationGrid, EnsembleParams, GridKind, Method};

use crate::liouville::{build_liouvillian, LiouvilleOperator};
use crate::sparse::{trace, trace_product, Csr};
use crate::steady::{steady_state, Propagator, SteadyState};
use crate::{OracleError, C64};

/// Transmitted-field operator pair in input-output form.
pub struct OutputFieldOps {
    pub annihilation: Csr,
    pub creation: Csr,
}

/// Returns the transmitted-field operators for the given ensemble.
pub fn output_field_ops(params: &EnsembleParams) -> Result<OutputFieldOps, OracleError> {
    let op = build_liouvillian(params)?;
    Ok(OutputFieldOps {
        annihilation: op.output_op().clone(),
        creation: op.output_op_dag().clone(),
    })
}

fn sandwich(op: &LiouvilleOperator, rho: &[C64], out: &mut [C64], tmp: &mut [C64]) {
    op.output_op().mul_dense(rho, tmp);
    op.output_op().mul_dense_left_dagger(tmp, out);
}

fn flux_of(op: &LiouvilleOperator, rho: &[C64], tmp: &mut [C64]) -> f64 {
    op.output_op().mul_dense(rho, tmp);
    trace_product(op.output_op_dag(), tmp).re
}

/// Normalized `g2(tau)` on the given time grid (times in `1/gamma_tot`,
/// ascending).
pub fn qrt_g2(params: &EnsembleParams, t_grid: &[f64]) -> Result<CorrelationGrid, OracleError> {
    let op = build_liouvillian(params)?;
    let ss = steady_state(&op, 1e-10)?;
    let values = g2_values(&op, &ss, t_grid)?;
    Ok(CorrelationGrid::new(
        GridKind::G2,
        Method::Oracle,
        *params,
        vec![t_grid.to_vec()],
        values,
    ))
}

fn g2_values(
    op: &LiouvilleOperator,
    ss: &SteadyState,
    t_grid: &[f64],
) -> Result<Vec<f64>, OracleError> {
    assert!(t_grid.windows(2).all(|w| w[1] >= w[0]), "grid must ascend");
    let g = op.params.gamma_tot;
    let n = op.dim();
    let ns = n * n;
    let flux = {
        let mut tmp = vec![C64::new(0.0, 0.0); ns];
        flux_of(op, &ss.rho, &mut tmp)
    };
    if flux <= 0.0 {
        return Err(OracleError::InvalidParams(
            "zero output flux; g2 undefined".into(),
        ));
    }
    let mut tmp = vec![C64::new(0.0, 0.0); ns];
    let mut rho1 = vec![C64::new(0.0, 0.0); ns];
    sandwich(op, &ss.rho, &mut rho1, &mut tmp);
    // normalize the conditional state so the integrator tolerances see an
    // O(1) object; the weight is restored in the correlator
    let w1 = trace(&rho1, n).re;
    for v in rho1.iter_mut() {
        *v /= w1;
    }
    let mut prop = Propagator::new(op);
    let mut values = Vec::with_capacity(t_grid.len());
    let mut t_now = 0.0;
    for &t in t_grid {
        let t = t / g;
        prop.advance(&mut rho1, t - t_now)?;
        t_now = t;
        values.push(w1 * flux_of(op, &rho1, &mut tmp) / (flux * flux));
    }
    Ok(values)
}

/// Normalized `g3(t1, t2, 0)` over the tensor grid of the two time axes
/// (times in `1/gamma_tot`, ascending from 0), ordered internally and
/// symmetrized across the diagonal.
pub fn qrt_g3(
    params: &EnsembleParams,
    t1_grid: &[f64],
    t2_grid: &[f64],
) -> Result<CorrelationGrid, OracleError> {
    assert_eq!(t1_grid, t2_grid, "the grid must be square for symmetrization");
    let op = build_liouvillian(params)?;
    let ss = steady_state(&op, 1e-10)?;
    let values = g3_values(&op, &ss, t1_grid)?;
    Ok(CorrelationGrid::new(
        GridKind::G3,
        Method::Oracle,
        *params,
        vec![t1_grid.to_vec(), t2_grid.to_vec()],
        values,
    ))
}

fn g3_values(
    op: &LiouvilleOperator,
    ss: &SteadyState,
    t_grid: &[f64],
) -> Result<Vec<f64>, OracleError> {
    assert!(t_grid.windows(2).all(|w| w[1] >= w[0]), "grid must ascend");
    assert!(t_grid.first().map(|&t| t >= 0.0).unwrap_or(true));
    let g = op.params.gamma_tot;
    let n = op.dim();
    let ns = n * n;
    let nt = t_grid.len();
    let flux = {
        let mut tmp = vec![C64::new(0.0, 0.0); ns];
        flux_of(op, &ss.rho, &mut tmp)
    };
    if flux <= 0.0 {
        return Err(OracleError::InvalidParams(
            "zero output flux; g3 undefined".into(),
        ));
    }
    // First detection at time 0 from the steady state; snapshot the evolved
    // conditional state at every grid time.
    let mut snapshots: Vec<Vec<C64>> = Vec::with_capacity(nt);
    let w1;
    {
        let mut tmp = vec![C64::new(0.0, 0.0); ns];
        let mut rho1 = vec![C64::new(0.0, 0.0); ns];
        sandwich(op, &ss.rho, &mut rho1, &mut tmp);
        w1 = trace(&rho1, n).re;
        for v in rho1.iter_mut() {
            *v /= w1;
        }
        let mut prop = Propagator::new(op);
        let mut t_now = 0.0;
        for &t in t_grid {
            let t = t / g;
            prop.advance(&mut rho1, t - t_now)?;
            t_now = t;
            snapshots.push(rho1.clone());
        }
    }
    // Second detection at each grid time, third at the later offsets; rows
    // are independent propagations.
    let rows: Result<Vec<Vec<f64>>, OracleError> = (0..nt)
        .into_par_iter()
        .map(|i| {
            let mut tmp = vec![C64::new(0.0, 0.0); ns];
            let mut rho2 = vec![C64::new(0.0, 0.0); ns];
            sandwich(op, &snapshots[i], &mut rho2, &mut tmp);
            let w2 = trace(&rho2, n).re;
            if w2 <= 1e-300 {
                return Ok(vec![0.0; nt - i]);
            }
            for v in rho2.iter_mut() {
                *v /= w2;
            }
            let mut prop = Propagator::new(op);
            let mut row = vec![0.0; nt - i];
            let mut t_now = 0.0;
            for (jj, &t) in t_grid[i..].iter().enumerate() {
                let offset = (t - t_grid[i]) / g;
                prop.advance(&mut rho2, offset - t_now)?;
                t_now = offset;
                row[jj] = w1 * w2 * flux_of(op, &rho2, &mut tmp) / (flux * flux * flux);
            }
            Ok(row)
        })
        .collect();
    let rows = rows?;
    let mut values = vec![0.0; nt * nt];
    for i in 0..nt {
        for (jj, &v) in rows[i].iter().enumerate() {
            let j = i + jj;
            values[i * nt + j] = v;
            values[j * nt + i] = v;
        }
    }
    Ok(values)
}

/// Connected `g3c(t1, t2, 0) = 2 + g3 - g2(t1) - g2(t2) - g2(|t1-t2|)` on a
/// square grid, assembled from one steady-state solve.
pub fn qrt_g3_connected(
    params: &EnsembleParams,
    t_grid: &[f64],
) -> Result<CorrelationGrid, OracleError> {
    let op = build_liouvillian(params)?;
    let ss = steady_state(&op, 1e-10)?;
    let g3 = g3_values(&op, &ss, t_grid)?;
    // g2 at all needed separations: grid values and pairwise differences.
    // For a uniform grid the differences are grid-valued, but handle the
    // general case by evaluating on the union.
    let mut seps: Vec<f64> = Vec::new();
    for (i, &a) in t_grid.iter().enumerate() {
        seps.push(a);
        for &b in &t_grid[i..] {
            seps.push(b - a);
        }
    }
    seps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    seps.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let g2_union = g2_values(&op, &ss, &seps)?;
    let lookup = |t: f64| -> f64 {
        let idx = seps
            .binary_search_by(|s| s.partial_cmp(&t).unwrap())
            .unwrap_or_else(|i| i.min(seps.len() - 1));
        // guard against rounding at the boundaries
        let idx = if idx > 0 && (seps[idx - 1] - t).abs() < (seps[idx] - t).abs() {
            idx - 1
        } else {
            idx
        };
        g2_union[idx]
    };
    let nt = t_grid.len();
    let mut values = vec![0.0; nt * nt];
    for i in 0..nt {
        for j in 0..nt {
            let (t1, t2) = (t_grid[i], t_grid[j]);
            values[i * nt + j] =
                2.0 + g3[i * nt + j] - lookup(t1) - lookup(t2) - lookup((t1 - t2).abs());
        }
    }
    Ok(CorrelationGrid::new(
        GridKind::G3Connected,
        Method::Oracle,
        *params,
        vec![t_grid.to_vec(), t_grid.to_vec()],
        values,
    ))
}

/// Equal-time normally ordered second moment `<c^H c^H c c>` computed
/// directly from a state; consistency anchor for `qrt_g2` at `tau = 0`.
pub fn equal_time_g2(op: &LiouvilleOperator, rho: &[C64]) -> f64 {
    let n = op.dim();
    let ns = n * n;
    let mut tmp = vec![C64::new(0.0, 0.0); ns];
    let mut q = vec![C64::new(0.0, 0.0); ns];
    // q = c rho c^H, flux = tr q
    op.output_op().mul_dense(rho, &mut tmp);
    op.output_op().mul_dense_left_dagger(&tmp, &mut q);
    let flux = trace(&q, n).re;
    // <c^H c^H c c> = tr(c^H c q)
    op.output_op().mul_dense(&q, &mut tmp);
    let num = trace_product(op.output_op_dag(), &tmp).re;
    num / (flux * flux)
}
