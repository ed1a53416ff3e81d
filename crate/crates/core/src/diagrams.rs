//! Momentum-space amplitudes of the three-photon-connected transport
//! diagrams through the M-atom array.
//!
//! The building blocks are site-ordered sums of transmission factors. With
//! `A` the per-site factor after all interactions, `B = t0^3` the factor
//! before any, and `G...` the factors between vertices, every diagram reduces
//! to a complete homogeneous symmetric polynomial `h_N(A, B, G...)`, which is
//! evaluated by a cancellation-free recurrence. The plain two-variable case
//! is the geometric sum of the single-vertex diagram and is exposed with an
//! explicit degenerate branch.
//!
//! All amplitudes accept complex momenta: the position-space transforms in
//! [`crate::wavefield`] run on a contour shifted off the real axis (every
//! pole sits at `|Im p| = gamma/2`), which turns the oscillatory Fourier
//! factors into exponentially damped ones. Loop-order diagrams carry one
//! internal momentum integrated numerically; a grid evaluation queries them
//! at hundreds of thousands of momentum nodes, so the loop integrals are
//! tabulated once per parameter set on the shifted plane and interpolated
//! bicubically afterwards.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
use num_traits::Float;

use crate::error::CoreError;
use crate::params::{EnsembleParams, Momentum};
use crate::quad::Rule;
use crate::scatter::{s2_density_c, s3_resonant_c, transmission_c};

/// Relative ratio-collision threshold for the geometric-sum branch.
pub const GEOM_DEGENERACY_EPS: f64 = 1e-8;

/// Loop diagrams default to "on" at and above this coupling efficiency.
pub const LOOP_AUTO_BETA_THRESHOLD: f64 = 0.03;

/// Kinds of three-photon-connected transport diagrams.
///
/// `ThreeVertex` and `FourVertex` carry beta powers 3 and 4 with site
/// combinatorics C(M,1) and C(M,2); the loop kinds carry beta powers 5 and 6
/// with C(M,2) and C(M,3) and are O(beta^3) corrections.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagramKind {
    ThreeVertex,
    FourVertex,
    LoopThreeTwo,
    LoopTwoTwoTwo,
}

impl DiagramKind {
    /// Power of beta carried by the diagram's vertices.
    pub fn beta_power(self) -> u32 {
        match self {
            DiagramKind::ThreeVertex => 3,
            DiagramKind::FourVertex => 4,
            DiagramKind::LoopThreeTwo => 5,
            DiagramKind::LoopTwoTwoTwo => 6,
        }
    }

    /// Number of distinct atomic sites the diagram occupies.
    pub fn num_sites(self) -> u32 {
        match self {
            DiagramKind::ThreeVertex => 1,
            DiagramKind::FourVertex | DiagramKind::LoopThreeTwo => 2,
            DiagramKind::LoopTwoTwoTwo => 3,
        }
    }
}

/// One diagram selected for evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagramSpec {
    pub kind: DiagramKind,
    /// Assignment of the outgoing momenta to the diagram legs, as a
    /// permutation of (p1, p2, p3).
    pub out_permutation: [usize; 3],
    pub enabled: bool,
}

/// Result of the closed-form geometric site sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricSumResult {
    pub value: C64,
    /// True when the ratio collision branch `|A - B| < eps * max(|A|,|B|)`
    /// was taken and the analytic limit `M * A^(M-1)` returned.
    pub degenerate: bool,
}

/// Closed form of `sum_{j=0}^{M-1} A^(M-1-j) B^j`.
pub fn geometric_sum(a: C64, b: C64, m: u32) -> GeometricSumResult {
    if m == 0 {
        return GeometricSumResult { value: C64::new(0.0, 0.0), degenerate: false };
    }
    let scale = a.norm().max(b.norm());
    if scale == 0.0 {
        let value = if m == 1 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
        return GeometricSumResult { value, degenerate: false };
    }
    if (a - b).norm() < GEOM_DEGENERACY_EPS * scale {
        return GeometricSumResult {
            value: a.powu(m - 1) * m as f64,
            degenerate: true,
        };
    }
    GeometricSumResult {
        value: (a.powu(m) - b.powu(m)) / (a - b),
        degenerate: false,
    }
}

/// Complete homogeneous symmetric polynomial `h_n(vals)` via the stable
/// dynamic-programming recurrence `h_n(x_1..x_j) = h_n(x_1..x_{j-1}) + x_j h_{n-1}(x_1..x_j)`.
///
/// `h_0 = 1`; negative degree gives 0. Cost O(n * len), no cancellation.
pub(crate) fn complete_homogeneous(vals: &[C64], degree: i64) -> C64 {
    if degree < 0 {
        return C64::new(0.0, 0.0);
    }
    let n = degree as usize;
    if vals.is_empty() {
        return if n == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
    }
    // h[d] holds h_d of the variables consumed so far.
    let mut h = vec![C64::new(0.0, 0.0); n + 1];
    h[0] = C64::new(1.0, 0.0);
    for d in 1..=n {
        h[d] = h[d - 1] * vals[0];
    }
    for &x in &vals[1..] {
        for d in 1..=n {
            let add = h[d - 1] * x;
            h[d] += add;
        }
    }
    h[n]
}

#[inline]
fn t0c(params: &EnsembleParams) -> C64 {
    C64::new(params.resonant_transmission(), 0.0)
}

#[inline]
fn tf(k: C64, params: &EnsembleParams) -> C64 {
    transmission_c(k, params.beta, params.gamma_tot)
}

/// Amplitude of the single three-photon-vertex diagram for resonant input,
///
/// ```text
/// T3v = sum_{j=0}^{M-1} (t_p1 t_p2 t_p3)^(M-j-1) beta^3 s3(p;0,0,0) t0^(3j)
/// ```
///
/// evaluated through [`geometric_sum`]. M = 0 gives 0.
pub fn t3v_amplitude(p1: Momentum, p2: Momentum, p3: Momentum, params: &EnsembleParams) -> C64 {
    t3v_c([p1.0.into(), p2.0.into(), p3.0.into()], params)
}

pub(crate) fn t3v_c(p: [C64; 3], params: &EnsembleParams) -> C64 {
    let m = params.num_atoms;
    if m == 0 {
        return C64::new(0.0, 0.0);
    }
    let after = tf(p[0], params) * tf(p[1], params) * tf(p[2], params);
    let before = t0c(params).powu(3);
    let dressing = geometric_sum(after, before, m).value;
    let vertex = s3_resonant_c(p, params.gamma_tot);
    dressing * vertex * params.beta.powi(3)
}

/// Amplitude of one 4-vertex diagram for resonant input. `perm` assigns the
/// outgoing momenta to the diagram legs: leg 0 exits the first two-photon
/// vertex directly, legs 1 and 2 exit the second vertex. The intermediate
/// momentum is fixed by conservation at the first vertex (`q2 = -p_leg0`).
/// The six permutations summed together restore bosonic symmetry.
pub fn t4v_amplitude(
    p1: Momentum,
    p2: Momentum,
    p3: Momentum,
    params: &EnsembleParams,
    perm: [usize; 3],
) -> C64 {
    let p: [C64; 3] = [p1.0.into(), p2.0.into(), p3.0.into()];
    t4v_single_c([p[perm[0]], p[perm[1]], p[perm[2]]], params)
}

/// 4-vertex amplitude with legs already assigned: `p[0]` exits vertex one,
/// `p[1]`, `p[2]` exit vertex two.
pub(crate) fn t4v_single_c(p: [C64; 3], params: &EnsembleParams) -> C64 {
    let m = params.num_atoms;
    if m <= 1 {
        return C64::new(0.0, 0.0);
    }
    let gamma = params.gamma_tot;
    let (a, b, c) = (p[0], p[1], p[2]);
    let q2 = -a;
    let ta = tf(a, params);
    let t0 = t0c(params);
    let all = ta * tf(b, params) * tf(c, params);
    let between = ta * tf(q2, params) * t0;
    let before = t0.powu(3);
    let dressing = ta * t0 * complete_homogeneous(&[all, between, before], m as i64 - 2);
    let v2 = s2_density_c(b, c, q2, C64::new(0.0, 0.0), gamma);
    let v1 = s2_density_c(a, q2, C64::new(0.0, 0.0), C64::new(0.0, 0.0), gamma);
    dressing * v2 * v1 * params.beta.powi(4)
}

/// Sum of the six 4-vertex permutation diagrams.
pub(crate) fn t4v_sum_c(p: [C64; 3], params: &EnsembleParams) -> C64 {
    // Legs 1 and 2 enter symmetrically, so each of the three distinct
    // assignments appears twice among the six permutations.
    let distinct = t4v_single_c([p[0], p[1], p[2]], params)
        + t4v_single_c([p[1], p[0], p[2]], params)
        + t4v_single_c([p[2], p[0], p[1]], params);
    distinct * 2.0
}

/// Loop-diagram integrands at fixed internal momentum `l`, before the
/// `1/(2 pi) * dl` measure. Leg conventions follow the diagram sketches:
///
/// * `LoopThreeTwo`: a three-photon vertex emits `p[0]` and internal momenta
///   `(l, -p[0]-l)`, which rescatter into `(p[1], p[2])` at a downstream
///   two-photon vertex.
/// * `LoopTwoTwoTwo`: two-photon vertices on lines (1,2), (2,3), (1,2) with
///   internal momenta `(-l, l)` and `l + p[0] + p[1]`; `p[2]` is the photon
///   scattered only at the middle vertex.
fn loop32_integrand(p: [C64; 3], lc: C64, params: &EnsembleParams) -> C64 {
    let m = params.num_atoms as i64;
    if m < 2 {
        return C64::new(0.0, 0.0);
    }
    let gamma = params.gamma_tot;
    let (a, b, c) = (p[0], p[1], p[2]);
    let ta = tf(a, params);
    let t0 = t0c(params);
    let all = ta * tf(b, params) * tf(c, params);
    let between = ta * tf(lc, params) * tf(-a - lc, params);
    let before = t0.powu(3);
    let dressing = ta * complete_homogeneous(&[all, between, before], m - 2);
    let v3 = s3_resonant_c([a, lc, -a - lc], gamma);
    let v2 = s2_density_c(b, c, lc, -a - lc, gamma);
    dressing * v3 * v2
}

fn loop222_integrand(p: [C64; 3], lc: C64, params: &EnsembleParams) -> C64 {
    let m = params.num_atoms as i64;
    if m < 3 {
        return C64::new(0.0, 0.0);
    }
    let gamma = params.gamma_tot;
    let (pt, pm, pb) = (p[0], p[1], p[2]);
    let zero = C64::new(0.0, 0.0);
    let t0 = t0c(params);
    let tml = tf(-lc, params);
    let tb = tf(pb, params);
    let lm = lc + pt + pm;
    let all = tf(pt, params) * tf(pm, params) * tb;
    let g1 = t0 * tf(lc, params) * tml;
    let g2 = tml * tf(lm, params) * tb;
    let before = t0.powu(3);
    let dressing = t0 * tml * tb * complete_homogeneous(&[all, before, g1, g2], m - 3);
    let va = s2_density_c(-lc, lc, zero, zero, gamma);
    let vc = s2_density_c(lm, pb, lc, zero, gamma);
    let vb = s2_density_c(pt, pm, -lc, lm, gamma);
    dressing * va * vc * vb
}

/// Direct evaluation of the summed loop-order correction at arbitrary
/// (possibly complex) outgoing momenta. Used for table construction and as
/// the reference for the interpolated path.
pub(crate) fn loop_sum_direct_c(p: [C64; 3], params: &EnsembleParams, l_rule: &Rule) -> C64 {
    let inv2pi = 0.5 / core::f64::consts::PI;
    let b5 = params.beta.powi(5);
    let b6 = params.beta.powi(6);
    let mut acc = C64::new(0.0, 0.0);
    for assign in [[p[0], p[1], p[2]], [p[1], p[0], p[2]], [p[2], p[0], p[1]]] {
        acc += l_rule.integrate_complex(|l| loop32_integrand(assign, C64::new(l, 0.0), params)) * b5 * inv2pi;
    }
    // The first two legs of the three-vertex chain enter symmetrically, so
    // the six external assignments collapse to three distinct ones, twice.
    for assign in [[p[0], p[1], p[2]], [p[0], p[2], p[1]], [p[1], p[2], p[0]]] {
        acc += l_rule.integrate_complex(|l| loop222_integrand(assign, C64::new(l, 0.0), params)) * (2.0 * b6 * inv2pi);
    }
    acc
}

/// Exact `1/(2 pi) int dl` of the loop integrands by closing the contour
/// upward. On the shifted plane (`|Im leg| <= mu < gamma/2`) every internal
/// pole stays at least `gamma/2 - mu` away from the real axis, so the sum of
/// upper-half-plane residues is unconditionally valid. The residues are
/// extracted by spectrally convergent circle quadratures: the three-two loop
/// has pole locations `i*gamma/2` and `-top + i*gamma/2` (merged into one
/// contour when the top leg is small), the two-two-two loop only
/// `i*gamma/2`.
pub(crate) fn loop_sum_exact(p: [C64; 3], params: &EnsembleParams, nodes: usize) -> C64 {
    let g = params.gamma_tot;
    let b5 = params.beta.powi(5);
    let b6 = params.beta.powi(6);
    let r = 0.15 * g;
    let pole0 = C64::new(0.0, 0.5 * g);
    let mut acc = C64::new(0.0, 0.0);
    for assign in [[p[0], p[1], p[2]], [p[1], p[0], p[2]], [p[2], p[0], p[1]]] {
        let f = |l: C64| loop32_integrand(assign, l, params);
        let pole_a = pole0 - assign[0];
        let sep = assign[0].norm();
        let residues = if sep < 2.0 * r + 0.2 * g {
            circle_residues(0.5 * (pole0 + pole_a), 0.5 * sep + r + 0.1 * g, 2 * nodes, &f)
        } else {
            circle_residues(pole0, r, nodes, &f) + circle_residues(pole_a, r, nodes, &f)
        };
        acc += C64::new(0.0, 1.0) * residues * b5;
    }
    for assign in [[p[0], p[1], p[2]], [p[0], p[2], p[1]], [p[1], p[2], p[0]]] {
        let f = |l: C64| loop222_integrand(assign, l, params);
        let residues = circle_residues(pole0, r, nodes, &f);
        acc += C64::new(0.0, 1.0) * residues * (2.0 * b6);
    }
    acc
}

#[doc(hidden)]
pub fn loop_sum_exact_pub(p: [C64; 3], params: &EnsembleParams, nodes: usize) -> C64 {
    loop_sum_exact(p, params, nodes)
}

/// Counterclockwise `(1/2 pi i) closed-int f` on `|l - center| = r`: the sum
/// of residues enclosed, by the trapezoid rule.
fn circle_residues(center: C64, r: f64, nodes: usize, f: impl Fn(C64) -> C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    let step = 2.0 * core::f64::consts::PI / nodes as f64;
    for k in 0..nodes {
        let phi = k as f64 * step;
        let dir = C64::new(phi.cos(), phi.sin());
        acc += f(center + dir * r) * dir;
    }
    acc * (r / nodes as f64)
}

/// O(beta^3) loop-order correction to the three-photon connected transport
/// amplitude: the diagrams with one three-photon and one two-photon vertex,
/// and with three two-photon vertices, summed over leg assignments, with the
/// internal momentum integrated numerically.
///
/// The result is checked against a doubled-resolution quadrature; exceeding
/// `tolerance` (relative) reports a diagnostic error carrying the best
/// estimate and the achieved error bound.
pub fn loop_amplitudes(
    p1: Momentum,
    p2: Momentum,
    p3: Momentum,
    params: &EnsembleParams,
    tolerance: f64,
) -> Result<C64, CoreError> {
    let p: [C64; 3] = [p1.0.into(), p2.0.into(), p3.0.into()];
    let coarse_rule = Rule::real_line(params.gamma_tot, 24, 10);
    let fine_rule = Rule::real_line(params.gamma_tot, 48, 10);
    let coarse = loop_sum_direct_c(p, params, &coarse_rule);
    let fine = loop_sum_direct_c(p, params, &fine_rule);
    let err = (coarse - fine).norm();
    if err > tolerance * fine.norm().max(1e-300) {
        return Err(CoreError::QuadratureNonConvergent {
            estimate: fine,
            error: err / fine.norm().max(1e-300),
            tolerance,
        });
    }
    Ok(fine)
}

/// Loop integrals tabulated on the contour-shifted momentum plane.
///
/// The transforms in `wavefield` sample the summed loop amplitude at momenta
/// `p1 = u1 - i*mu`, `p2 = -u1 - u3`, `p3 = u3 + i*mu` with `(u1, u3)` real.
/// The amplitude has near-resonance ridges of width `~gamma` along `u3 ~ 0`
/// (third leg) and `u1 + u3 ~ 0` (second leg); a tangent-mapped grid cannot
/// resolve them far from the origin, so three grids are kept:
///
/// * `main`: tangent-mapped in both axes, accurate away from the ridges;
/// * `axis`: uniform in `(u1, u3)` over `|u1| <= core_span`,
///   `|u3| <= window`, resolving the third-leg ridge band;
/// * `diag`: uniform in `(u1, v = u1+u3)` over the same spans, resolving the
///   second-leg band.
///
/// Values include the beta weights of both loop orders.
#[derive(Debug, Clone)]
pub struct LoopTables {
    mu: f64,
    window: f64,
    core_span: f64,
    square: UniformGrid,
    axis: UniformGrid,
    diag: UniformGrid,
    axis_far: UniformGrid,
    diag_far: UniformGrid,
}

#[derive(Debug, Clone)]
struct UniformGrid {
    nx: usize,
    ny: usize,
    x0: f64,
    y0: f64,
    hx: f64,
    hy: f64,
    values: Vec<C64>,
}

impl UniformGrid {
    fn build(
        x0: f64,
        x1: f64,
        nx: usize,
        y0: f64,
        y1: f64,
        ny: usize,
        mut f: impl FnMut(f64, f64) -> C64,
    ) -> Self {
        let hx = (x1 - x0) / (nx - 1) as f64;
        let hy = (y1 - y0) / (ny - 1) as f64;
        let mut values = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                values.push(f(x0 + i as f64 * hx, y0 + j as f64 * hy));
            }
        }
        Self { nx, ny, x0, y0, hx, hy, values }
    }

    fn x_max(&self) -> f64 {
        self.x0 + (self.nx - 1) as f64 * self.hx
    }

    /// True when a bicubic stencil around the point stays inside the grid.
    fn covers(&self, x: f64, y: f64) -> bool {
        let fx = (x - self.x0) / self.hx;
        let fy = (y - self.y0) / self.hy;
        fx >= 1.0 && fy >= 1.0 && fx <= (self.nx - 3) as f64 && fy <= (self.ny - 3) as f64
    }

    fn eval(&self, x: f64, y: f64) -> C64 {
        let fx = (x - self.x0) / self.hx;
        let fy = (y - self.y0) / self.hy;
        let ix = (fx.floor() as usize).clamp(1, self.nx - 3);
        let iy = (fy.floor() as usize).clamp(1, self.ny - 3);
        let tx = fx - ix as f64;
        let ty = fy - iy as f64;
        let mut rows = [C64::new(0.0, 0.0); 4];
        for (r, row) in rows.iter_mut().enumerate() {
            let base = (ix + r - 1) * self.ny + (iy - 1);
            *row = catmull_rom(
                self.values[base],
                self.values[base + 1],
                self.values[base + 2],
                self.values[base + 3],
                ty,
            );
        }
        catmull_rom(rows[0], rows[1], rows[2], rows[3], tx)
    }
}

impl LoopTables {
    /// Builds the three grids from the exact residue form of the internal
    /// momentum integral. `n` is the tangent-grid resolution per axis,
    /// `scale` its momentum scale, `mu` the contour shift (below gamma/2).
    /// The residue evaluation is cross-checked against direct line
    /// quadrature on a sample of points; disagreement beyond `tolerance`
    /// reports a diagnostic error.
    pub fn build(
        params: &EnsembleParams,
        mu: f64,
        residue_nodes: usize,
        tolerance: f64,
    ) -> Result<Self, CoreError> {
        assert!(mu.abs() < 0.5 * params.gamma_tot, "contour shift crosses a pole");
        let g = params.gamma_tot;
        let window = 16.0 * g;
        let core_span = 24.0 * g;
        // Cross-check the residue closure against the line rule before
        // filling the grids; the comparison is made near the origin (where
        // the line rule resolves the internal poles) and normalized to the
        // central scale.
        let check_rule = Rule::real_line(g, 48, 10);
        let central = loop_sum_exact(Self::shifted_point(0.0, 0.0, mu), params, residue_nodes)
            .norm()
            .max(1e-300);
        let mut worst = 0.0f64;
        let mut worst_est = C64::new(0.0, 0.0);
        for &(u1, u3) in &[(0.0, 0.0), (0.7, -0.3), (2.5, 1.1), (-1.4, 0.6)] {
            let p = Self::shifted_point(u1 * g, u3 * g, mu);
            let exact = loop_sum_exact(p, params, residue_nodes);
            let line = loop_sum_direct_c(p, params, &check_rule);
            let err = (exact - line).norm() / central;
            if err > worst {
                worst = err;
                worst_est = exact;
            }
        }
        if worst > tolerance {
            return Err(CoreError::QuadratureNonConvergent {
                estimate: worst_est,
                error: worst,
                tolerance,
            });
        }
        let eval = |u1: f64, u3: f64| {
            loop_sum_exact(Self::shifted_point(u1, u3, mu), params, residue_nodes)
        };
        // Ridge bands at fine resolution, their far extensions coarser in
        // u1 (the amplitude varies on the u1 scale itself out there), and a
        // moderate grid over the whole core square for the region where
        // every leg is off resonance.
        let per_gamma = 8.0;
        let nx = (2.0 * core_span / g * per_gamma) as usize + 1;
        let ny = (2.0 * window / g * per_gamma) as usize + 1;
        let axis = UniformGrid::build(-core_span, core_span, nx, -window, window, ny, |u1, u3| {
            eval(u1, u3)
        });
        let diag = UniformGrid::build(-core_span, core_span, nx, -window, window, ny, |u1, v| {
            eval(u1, v - u1)
        });
        let far_span = 120.0 * g;
        let nx_far = (2.0 * far_span / g * 1.5) as usize + 1;
        let axis_far =
            UniformGrid::build(-far_span, far_span, nx_far, -window, window, ny, |u1, u3| {
                eval(u1, u3)
            });
        let diag_far =
            UniformGrid::build(-far_span, far_span, nx_far, -window, window, ny, |u1, v| {
                eval(u1, v - u1)
            });
        let n_sq = (2.0 * core_span / g * 2.0) as usize + 1;
        let square = UniformGrid::build(
            -core_span,
            core_span,
            n_sq,
            -core_span,
            core_span,
            n_sq,
            |u1, u3| eval(u1, u3),
        );
        Ok(Self {
            mu,
            window,
            core_span,
            square,
            axis,
            diag,
            axis_far,
            diag_far,
        })
    }

    #[doc(hidden)]
    pub fn shifted_point_pub(u1: f64, u3: f64, mu: f64) -> [C64; 3] {
        Self::shifted_point(u1, u3, mu)
    }

    #[inline]
    pub(crate) fn shifted_point(u1: f64, u3: f64, mu: f64) -> [C64; 3] {
        [C64::new(u1, -mu), C64::new(-u1 - u3, 0.0), C64::new(u3, mu)]
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Half-width of the uniform ridge windows, the natural plateau scale
    /// for the partition in `wavefield`.
    pub(crate) fn ridge_window(&self) -> f64 {
        self.window
    }

    /// Half-extent of the finely gridded core along `u1`.
    pub(crate) fn core_reach(&self) -> f64 {
        self.core_span
    }

    /// Half-extent of the far band grids along `u1`.
    pub(crate) fn band_reach(&self) -> f64 {
        self.axis_far.x_max()
    }

    #[doc(hidden)]
    pub fn debug_amplitude(&self, u1: f64, u3: f64) -> C64 {
        self.amplitude_shifted(u1, u3)
    }

    #[doc(hidden)]
    pub fn debug_exact(&self, params: &EnsembleParams, u1: f64, u3: f64, nodes: usize) -> C64 {
        loop_sum_exact(Self::shifted_point(u1, u3, self.mu), params, nodes)
    }

    #[doc(hidden)]
    pub fn debug_line(&self, params: &EnsembleParams, u1: f64, u3: f64, rule: &Rule) -> C64 {
        loop_sum_direct_c(Self::shifted_point(u1, u3, self.mu), params, rule)
    }

    /// Summed loop amplitude at the shifted-plane point `(u1, u3)`, routed
    /// to whichever grid resolves that region. Outside all grids the
    /// amplitude has decayed below table accuracy and 0 is returned.
    pub(crate) fn amplitude_shifted(&self, u1: f64, u3: f64) -> C64 {
        let v = u1 + u3;
        if u3.abs() <= self.window {
            if self.axis.covers(u1, u3) {
                return self.axis.eval(u1, u3);
            }
            if self.axis_far.covers(u1, u3) {
                return self.axis_far.eval(u1, u3);
            }
        }
        if v.abs() <= self.window {
            if self.diag.covers(u1, v) {
                return self.diag.eval(u1, v);
            }
            if self.diag_far.covers(u1, v) {
                return self.diag_far.eval(u1, v);
            }
        }
        if self.square.covers(u1, u3) {
            return self.square.eval(u1, u3);
        }
        C64::new(0.0, 0.0)
    }
}

#[inline]
fn catmull_rom(p0: C64, p1: C64, p2: C64, p3: C64, t: f64) -> C64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (p1 * 2.0
        + (p2 - p0) * t
        + (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * t2
        + ((p1 - p2) * 3.0 + p3 - p0) * t3)
        * 0.5
}

/// Slow reference evaluators: explicit site-ordered summations used as the
/// independent cross-check for the closed forms. Quadratic in M.
pub mod reference {
    use super::*;

    /// Explicit j-loop evaluation of the three-vertex diagram.
    pub fn brute_t3v(p: [C64; 3], params: &EnsembleParams) -> C64 {
        let m = params.num_atoms;
        let after = tf(p[0], params) * tf(p[1], params) * tf(p[2], params);
        let t0 = t0c(params);
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..m {
            acc += after.powu(m - j - 1) * t0.powu(3 * j);
        }
        acc * s3_resonant_c(p, params.gamma_tot) * params.beta.powi(3)
    }

    /// Explicit (j, m)-loop evaluation of one 4-vertex diagram with legs
    /// already assigned as in the closed form.
    pub fn brute_t4v(p: [C64; 3], params: &EnsembleParams) -> C64 {
        let m = params.num_atoms;
        if m <= 1 {
            return C64::new(0.0, 0.0);
        }
        let gamma = params.gamma_tot;
        let (a, b, c) = (p[0], p[1], p[2]);
        let q2 = -a;
        let zero = C64::new(0.0, 0.0);
        let ta = tf(a, params);
        let tbc = tf(b, params) * tf(c, params);
        let tq = tf(q2, params);
        let t0 = t0c(params);
        let mut acc = C64::new(0.0, 0.0);
        for j in 0..=(m - 2) {
            for mm in 0..=(m - j - 2) {
                acc += ta.powu(m - j - 1)
                    * tbc.powu(m - j - mm - 2)
                    * tq.powu(mm)
                    * t0.powu(3 * j + mm + 1);
            }
        }
        acc * s2_density_c(b, c, q2, zero, gamma)
            * s2_density_c(a, q2, zero, zero, gamma)
            * params.beta.powi(4)
    }

    /// Brute-force complete homogeneous polynomial by composition enumeration.
    pub fn brute_h(vals: &[C64], degree: i64) -> C64 {
        if degree < 0 {
            return C64::new(0.0, 0.0);
        }
        fn rec(vals: &[C64], degree: usize) -> C64 {
            match vals {
                [] => {
                    if degree == 0 {
                        C64::new(1.0, 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                }
                [first, rest @ ..] => {
                    let mut acc = C64::new(0.0, 0.0);
                    for d in 0..=degree {
                        acc += first.powu(d as u32) * rec(rest, degree - d);
                    }
                    acc
                }
            }
        }
        rec(vals, degree as usize)
    }
}
