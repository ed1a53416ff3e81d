//! Panel-composite Gauss-Legendre quadrature, on finite intervals and on the
//! whole real line through the tangent map `p = scale * tan(theta)`.
//!
//! The integrands appearing in this crate are rational functions with all
//! poles displaced off the real axis by O(gamma/2), times oscillatory Fourier
//! factors; they are analytic on the integration path, so composite
//! Gauss-Legendre converges geometrically in the panel order. Convergence is
//! always established empirically by comparing against a rule with doubled
//! panel count (see `CorrelationEvaluator::convergence_check`).

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
use num_traits::Float;

/// Gauss-Legendre abscissas and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Nodes and weights by Newton iteration on the Legendre recurrence.
    pub fn new(order: usize) -> Self {
        assert!(order >= 2, "Gauss rule needs order >= 2");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let pi = core::f64::consts::PI;
        for i in 0..n.div_ceil(2) {
            let mut x = (pi * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // Legendre P_n(x) and derivative via the three-term recurrence.
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=n {
                    let jf = j as f64;
                    let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }
}

/// A concrete list of sample points and weights for one-dimensional
/// integration; the integral is `sum_i w_i f(x_i)`.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Composite rule over [a, b] with `panels` equal panels.
    pub fn finite(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let base = GaussRule::new(order);
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        let h = (b - a) / panels as f64;
        for p in 0..panels {
            let (lo, hi) = (a + p as f64 * h, a + (p + 1) as f64 * h);
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            for (x, w) in base.nodes.iter().zip(&base.weights) {
                nodes.push(mid + half * x);
                weights.push(half * w);
            }
        }
        Self { nodes, weights }
    }

    /// Rule for integrals over the whole real line via `p = scale * tan(theta)`.
    ///
    /// The Jacobian `scale * sec^2(theta)` is folded into the weights, so the
    /// caller integrates `f(p)` directly.
    pub fn real_line(scale: f64, panels: usize, order: usize) -> Self {
        let half_pi = 0.5 * core::f64::consts::PI;
        // Stay a hair inside the endpoints: the Jacobian is singular there
        // and the physical integrands vanish in the excluded tails.
        let eps = 1e-12;
        let theta = Self::finite(-half_pi + eps, half_pi - eps, panels, order);
        let mut nodes = Vec::with_capacity(theta.len());
        let mut weights = Vec::with_capacity(theta.len());
        for (t, w) in theta.nodes.iter().zip(&theta.weights) {
            let c = t.cos();
            nodes.push(scale * t.sin() / c);
            weights.push(w * scale / (c * c));
        }
        Self { nodes, weights }
    }

    pub fn integrate_complex(&self, mut f: impl FnMut(f64) -> C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(*x) * *w;
        }
        acc
    }

    pub fn integrate_real(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += f(*x) * *w;
        }
        acc
    }
}
