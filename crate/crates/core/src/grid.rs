//! Correlation grids: the common in-memory product shared by the
//! diagrammatic evaluator, the master-equation reference solver, and the
//! file-format layer.

use alloc::vec::Vec;

use crate::params::EnsembleParams;

/// Which correlation function a grid holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    G2,
    G3,
    G3Connected,
    G3ConnectedUnnormalized,
}

impl GridKind {
    pub fn label(self) -> &'static str {
        match self {
            GridKind::G2 => "g2",
            GridKind::G3 => "g3",
            GridKind::G3Connected => "g3c",
            GridKind::G3ConnectedUnnormalized => "G3c",
        }
    }
}

/// How a grid was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Diagrammatic,
    Oracle,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Diagrammatic => "diagrammatic",
            Method::Oracle => "oracle",
        }
    }
}

/// A real-valued correlation function sampled on a tensor-product grid.
///
/// `values` is stored row-major in the order of `axes`; a 1-D grid has one
/// axis, a 2-D grid two.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGrid {
    pub kind: GridKind,
    pub method: Method,
    pub params: EnsembleParams,
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl CorrelationGrid {
    pub fn new(
        kind: GridKind,
        method: Method,
        params: EnsembleParams,
        axes: Vec<Vec<f64>>,
        values: Vec<f64>,
    ) -> Self {
        let expect: usize = axes.iter().map(Vec::len).product();
        assert_eq!(values.len(), expect, "grid values do not match axes");
        Self { kind, method, params, axes, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at a 2-D index (row = first axis).
    pub fn at(&self, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.axes.len(), 2);
        self.values[i * self.axes[1].len() + j]
    }

    /// True when both grids sample the same axes and hold the same kind.
    pub fn same_layout(&self, other: &Self) -> bool {
        self.kind == other.kind && self.axes == other.axes
    }
}

/// Uniformly spaced grid vector including both endpoints.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "grid needs at least two points");
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + i as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> EnsembleParams {
        EnsembleParams { beta: 0.05, num_atoms: 2, gamma_tot: 1.0, drive_power: 0.02 }
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(0.0, 5.0, 50);
        assert_eq!(v.len(), 50);
        assert_eq!(v[0], 0.0);
        assert_eq!(*v.last().unwrap(), 5.0);
    }

    #[test]
    fn grid_indexing() {
        let axes = alloc::vec![linspace(0.0, 1.0, 2), linspace(0.0, 1.0, 3)];
        let values = alloc::vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let g = CorrelationGrid::new(GridKind::G2, Method::Diagrammatic, p(), axes, values);
        assert_eq!(g.at(1, 2), 5.0);
        assert_eq!(g.at(0, 1), 1.0);
    }
}
