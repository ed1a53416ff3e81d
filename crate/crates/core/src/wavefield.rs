//! Position-space correlated wavefunctions.
//!
//! `phi2(x1, x2)` is the two-photon entangled amplitude generated by all
//! single two-photon interactions in the array, `phi3(x1, x2, x3)` the
//! three-photon-connected amplitude from the transport diagrams, and
//! `psi2`/`psi3` the coherent-input wavefunctions
//!
//! ```text
//! psi2 = t0^(2M) + phi2,
//! psi3 = t0^(3M) + t0^M * sum_{i<j} phi2(x_i, x_j) + phi3.
//! ```
//!
//! The transforms are inverse Fourier integrals of rational amplitudes whose
//! poles in each momentum variable sit at `Im = +-gamma/2` offsets. Direct
//! quadrature of such transforms is dominated by oscillatory noise from the
//! slowly decaying tails, so the evaluation is organized around the pole
//! structure instead:
//!
//! * `phi2`: the only lower-half-plane pole is `p = -i*gamma/2`; closing the
//!   contour downward reduces the transform to one residue, extracted by a
//!   spectrally convergent circle quadrature.
//! * `phi3` (tree diagrams): the inner momentum integral is closed downward
//!   onto its two pole locations (`-i*gamma/2` and `-p3 - i*gamma/2`), again
//!   by circle quadratures; the remaining one-dimensional integral has its
//!   `1/p^2` and `1/p^3` tails measured numerically and subtracted, with the
//!   subtracted parts transformed in closed form, so the line quadrature only
//!   sees a fast-decaying remainder.
//! * `phi3` (loop diagrams): the loop correction is small and is transformed
//!   on a contour shifted by `mu < gamma/2`, sampling the tabulated loop
//!   integrals of [`crate::diagrams::LoopTables`].
//!
//! Coordinates are canonically sorted before evaluation, which makes the
//! bosonic permutation symmetry of every result exact in floating point.

use alloc::vec::Vec;

use num_complex::Complex64 as C64;
use num_traits::Float;

use crate::diagrams::{t3v_c, t4v_sum_c, LoopTables, LOOP_AUTO_BETA_THRESHOLD};
use crate::error::CoreError;
use crate::params::EnsembleParams;
use crate::quad::Rule;
use crate::scatter::s2_density_c;
use crate::{diagrams, scatter};

/// Whether loop-order diagrams enter `phi3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LoopMode {
    /// On for `beta >= 0.03`, off below.
    #[default]
    Auto,
    On,
    Off,
}

impl LoopMode {
    pub fn resolve(self, beta: f64) -> bool {
        match self {
            LoopMode::Auto => beta >= LOOP_AUTO_BETA_THRESHOLD,
            LoopMode::On => true,
            LoopMode::Off => false,
        }
    }
}

/// Tunable numerical parameters. Lengths are in units of `1/gamma_tot`,
/// momentum scales in units of `gamma_tot`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericsConfig {
    /// Nodes of the residue circle for `phi2`.
    pub phi2_circle_nodes: usize,
    /// Nodes per residue circle of the inner `phi3` integral.
    pub inner_circle_nodes: usize,
    /// Panels of the outer `phi3` line rule.
    pub outer_panels: usize,
    /// Gauss-Legendre order within each panel.
    pub quad_order: usize,
    /// Tangent-map momentum scale of the line rules.
    pub quad_scale: f64,
    /// Momentum magnitude at which the outer tail coefficients are measured.
    pub peel_momentum: f64,
    /// Contour shift for the loop-correction transform; must stay below 1/2.
    pub contour_shift: f64,
    /// Trapezoid nodes of the residue circles for the internal loop
    /// momentum integral.
    pub loop_residue_nodes: usize,
    /// Step of the cached `phi2` table.
    pub table_step: f64,
    /// Half-range of the cached `phi2` table.
    pub table_range: f64,
    /// Relative tolerance for the built-in convergence probes.
    pub convergence_tol: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            phi2_circle_nodes: 128,
            inner_circle_nodes: 128,
            outer_panels: 64,
            quad_order: 10,
            quad_scale: 1.5,
            peel_momentum: 300.0,
            contour_shift: 0.20,
            loop_residue_nodes: 48,
            table_step: 0.01,
            table_range: 45.0,
            convergence_tol: 1e-6,
        }
    }
}

/// Cached `phi2` on a uniform grid in the separation `|x1 - x2|`, with
/// Catmull-Rom interpolation. Separations beyond the table range map to 0
/// (the amplitude decays like `exp(-gamma |x|/2)` and is far below the table
/// tolerance there).
#[derive(Debug, Clone)]
pub struct Phi2Table {
    step: f64,
    values: Vec<f64>,
}

impl Phi2Table {
    fn eval(&self, sep: f64) -> f64 {
        let f = sep / self.step;
        let n = self.values.len();
        if !(f >= 0.0) || f >= (n - 2) as f64 {
            return 0.0;
        }
        let i = (f.floor() as usize).min(n - 3);
        let t = f - i as f64;
        // Clamped stencil at the left edge: phi2 is even in the separation,
        // so the mirrored neighbour equals values[1].
        let pm1 = if i == 0 { self.values[1] } else { self.values[i - 1] };
        let (p0, p1, p2) = (self.values[i], self.values[i + 1], self.values[i + 2]);
        let t2 = t * t;
        let t3 = t2 * t;
        0.5 * (2.0 * p0
            + (p1 - pm1) * t
            + (2.0 * pm1 - 5.0 * p0 + 4.0 * p1 - p2) * t2
            + (3.0 * (p0 - p1) + p2 - pm1) * t3)
    }
}

/// Evaluator for the correlated wavefunctions at one parameter set.
///
/// Construction builds the `phi2` table and, when loops are enabled, the
/// loop-integral tables, then probes convergence of every quadrature against
/// refined rules; a failed probe is reported as `QuadratureNonConvergent`.
/// All methods take `&self` and are safe to call from any number of threads.
#[derive(Debug, Clone)]
pub struct WavefieldEvaluator {
    params: EnsembleParams,
    numerics: NumericsConfig,
    loops: Option<LoopTables>,
    phi2_table: Phi2Table,
    outer_rule: Rule,
}

impl WavefieldEvaluator {
    pub fn new(
        params: EnsembleParams,
        numerics: NumericsConfig,
        loop_mode: LoopMode,
    ) -> Result<Self, CoreError> {
        params.validate()?;
        assert!(
            numerics.contour_shift < 0.5,
            "contour shift must stay below gamma_tot/2"
        );
        let g = params.gamma_tot;
        let outer_rule = Rule::real_line(numerics.quad_scale * g, numerics.outer_panels, numerics.quad_order);
        let loops_on = loop_mode.resolve(params.beta) && params.num_atoms >= 2;
        let loops = if loops_on {
            Some(LoopTables::build(
                &params,
                numerics.contour_shift * g,
                numerics.loop_residue_nodes,
                1e-6,
            )?)
        } else {
            None
        };
        let mut ev = Self {
            params,
            numerics,
            loops,
            phi2_table: Phi2Table { step: numerics.table_step / g, values: Vec::new() },
            outer_rule,
        };
        ev.phi2_table.values = ev.build_phi2_table();
        ev.convergence_check()?;
        Ok(ev)
    }

    pub fn params(&self) -> &EnsembleParams {
        &self.params
    }

    pub fn numerics(&self) -> &NumericsConfig {
        &self.numerics
    }

    pub fn loops_enabled(&self) -> bool {
        self.loops.is_some()
    }

    fn build_phi2_table(&self) -> Vec<f64> {
        if self.params.num_atoms == 0 {
            return alloc::vec![0.0; 4];
        }
        let g = self.params.gamma_tot;
        let step = self.numerics.table_step / g;
        let n = (self.numerics.table_range / g / step).ceil() as usize + 2;
        (0..n).map(|i| self.phi2_sep(i as f64 * step, self.numerics.phi2_circle_nodes).re).collect()
    }

    /// Momentum-space two-photon transport amplitude
    /// `T2(p) = beta^2 s2(p,-p;0,0) geom(t_p t_-p, t0^2, M)`.
    fn t2_amplitude(&self, p: C64) -> C64 {
        let params = &self.params;
        let g = params.gamma_tot;
        let t0sq = C64::new(params.resonant_transmission(), 0.0).powu(2);
        let tp = scatter::transmission_c(p, params.beta, g);
        let tm = scatter::transmission_c(-p, params.beta, g);
        let dress = diagrams::geometric_sum(tp * tm, t0sq, params.num_atoms).value;
        let vertex = s2_density_c(p, -p, C64::new(0.0, 0.0), C64::new(0.0, 0.0), g);
        dress * vertex * (params.beta * params.beta)
    }

    /// `phi2` at separation `sep >= 0` by closing the transform downward onto
    /// the single pole at `p = -i*gamma/2`:
    /// `phi2 = -i * Res[T2(p) e^(-i p sep)]`, extracted on a circle.
    fn phi2_sep(&self, sep: f64, nodes: usize) -> C64 {
        if self.params.num_atoms == 0 {
            return C64::new(0.0, 0.0);
        }
        let g = self.params.gamma_tot;
        // Shrink the circle for large separations to keep the dynamic range
        // of e^{-ip*sep} on the contour small; any radius encloses the pole.
        let r = (0.25 * g).min(3.0 / (1.0 + sep * g) * g);
        let center = C64::new(0.0, -0.5 * g);
        let residue = circle_mean(center, r, nodes, |p| {
            self.t2_amplitude(p) * (C64::new(0.0, -1.0) * p * sep).exp()
        });
        C64::new(0.0, -1.0) * residue
    }

    /// Two-photon correlated amplitude; depends only on `|x1 - x2|` by
    /// translational invariance, evaluated from the cached table.
    pub fn phi2(&self, x1: f64, x2: f64) -> C64 {
        C64::new(self.phi2_table.eval((x1 - x2).abs()), 0.0)
    }

    /// Table-free `phi2` used by verification paths.
    pub fn phi2_direct(&self, x1: f64, x2: f64) -> C64 {
        self.phi2_sep((x1 - x2).abs(), self.numerics.phi2_circle_nodes)
    }

    /// Tree-level momentum-space amplitude (3-vertex plus the six 4-vertex
    /// permutation diagrams) at outgoing momenta `(p1, -p1-p3, p3)`.
    fn t3_tree(&self, p1: C64, p3: C64) -> C64 {
        let p = [p1, -p1 - p3, p3];
        t3v_c(p, &self.params) + t4v_sum_c(p, &self.params)
    }

    /// Inner transform of the tree amplitude: `(1/2pi) int dp1 T3 e^(-i p1 d)`
    /// closed downward onto the poles at `-i*gamma/2` and `-p3 - i*gamma/2`.
    /// Returns `-i * residue` separately per pole location. Valid only where
    /// the locations are well separated; near `p3 = 0` use
    /// [`Self::inner_tree_merged`], which integrates one contour around both
    /// (the parts have a spurious `1/p3` collision singularity there that
    /// cancels in the sum).
    fn inner_tree_parts(&self, p3: f64, d: f64, nodes: usize) -> (C64, C64) {
        let g = self.params.gamma_tot;
        let pole_a = C64::new(0.0, -0.5 * g);
        let pole_b = C64::new(-p3, -0.5 * g);
        let f = |p1: C64| self.t3_tree(p1, C64::new(p3, 0.0)) * (C64::new(0.0, -1.0) * p1 * d).exp();
        // Shrink with separation d to bound the e^{-i p1 d} dynamic range on
        // the contour; any radius enclosing only the local pole is valid.
        let r = (0.25 * g).min(3.0 * g / (1.0 + d * g));
        let mi = C64::new(0.0, -1.0);
        (
            mi * circle_mean(pole_a, r, nodes, &f),
            mi * circle_mean(pole_b, r, nodes, &f),
        )
    }

    fn inner_tree_merged(&self, p3: f64, d: f64, nodes: usize) -> C64 {
        let g = self.params.gamma_tot;
        let pole_a = C64::new(0.0, -0.5 * g);
        let pole_b = C64::new(-p3, -0.5 * g);
        let f = |p1: C64| self.t3_tree(p1, C64::new(p3, 0.0)) * (C64::new(0.0, -1.0) * p1 * d).exp();
        let center = 0.5 * (pole_a + pole_b);
        let r = 0.5 * p3.abs() + 0.3 * g;
        C64::new(0.0, -1.0) * circle_mean(center, r, 2 * nodes, f)
    }

    /// Tree-level part of `phi3` for sorted separations `y1 >= y2 >= 0`.
    ///
    /// The two residue families enter the outer integral with different
    /// phases: the `-i*gamma/2` family oscillates like `e^(i p3 y2)`, while
    /// the `-p3 - i*gamma/2` family carries an extra `e^(i p3 d)` from the
    /// inner Fourier factor at its pole and therefore oscillates like
    /// `e^(i p3 y1)`. Both decay only as `1/p3^2`; each family's four leading
    /// tail orders are measured at `+-peel_momentum` (and half of it) and
    /// subtracted through [`TailPeel`], so the line rule only sees a `1/p3^6`
    /// remainder. The subtracted profiles transform in closed form with the
    /// matching phase.
    fn phi3_tree(&self, y1: f64, y2: f64, rule: &Rule, inner_nodes: usize) -> C64 {
        let g = self.params.gamma_tot;
        let d = y1 - y2;
        let split = 1.2 * g;
        let big = self.numerics.peel_momentum * g;
        let mut far_a = [C64::new(0.0, 0.0); 4];
        let mut far_b = [C64::new(0.0, 0.0); 4];
        let probes = [big, -big, 0.5 * big, -0.5 * big];
        for (i, &p3) in probes.iter().enumerate() {
            let (ra, rb) = self.inner_tree_parts(p3, d, inner_nodes);
            far_a[i] = ra;
            // De-oscillated b-family values S_b = R_b e^{-i p3 d}.
            far_b[i] = rb * (C64::new(0.0, -p3 * d)).exp();
        }
        let peel_a = TailPeel::fit(&probes, &far_a, g);
        let peel_b = TailPeel::fit(&probes, &far_b, g);
        let line = rule.integrate_complex(|p3| {
            let r1 = if p3.abs() <= split {
                self.inner_tree_merged(p3, d, inner_nodes)
            } else {
                let (ra, rb) = self.inner_tree_parts(p3, d, inner_nodes);
                ra + rb
            };
            let phase_d = C64::new(0.0, p3 * d).exp();
            let peel = peel_a.profile(p3) + peel_b.profile(p3) * phase_d;
            (r1 - peel) * (C64::new(0.0, p3 * y2)).exp()
        });
        // The b-family phases combine as y2 + d = y1.
        let tails = peel_a.transform(y2) + peel_b.transform(y1);
        (line + tails) / (2.0 * core::f64::consts::PI)
    }

    /// Loop-order part of `phi3`, transformed on the shifted contour with
    /// tabulated loop integrals.
    ///
    /// The loop amplitude decays only like `1/u^2` along each momentum axis,
    /// so the double transform is evaluated with a separable tail
    /// subtraction: the `u1` tails are fitted per `u3` node (and vice versa)
    /// with the [`TailPeel`] profile family, the doubly-peeled remainder is
    /// integrated by the two-dimensional rule, and the subtracted slices are
    /// reduced to one-dimensional clean integrals plus closed-form corner
    /// terms by inclusion-exclusion.
    /// The loop correction is evaluated at pinned internal resolutions tied
    /// to the tabulated grids, like the other cached layers; it does not
    /// scale with the transform quadrature knobs.
    fn phi3_loops(&self, y1: f64, y2: f64) -> C64 {
        if self.loops.is_none() {
            return C64::new(0.0, 0.0);
        }
        let parts = self.phi3_loop_parts(y1, y2);
        parts[0] + parts[1] + parts[2]
    }

    fn phi3_loop_parts(&self, y1: f64, y2: f64) -> [C64; 3] {
        let Some(tables) = self.loops.as_ref() else {
            return [C64::new(0.0, 0.0); 3];
        };
        let g = self.params.gamma_tot;
        let mu = self.numerics.contour_shift * g;
        let d = y1 - y2;
        // The loop amplitude carries near-resonance ridges of width ~gamma
        // along u3 ~ 0 (third leg), u1 + u3 ~ 0 (second leg), and u1 ~ 0
        // (first leg; central, always resolved). The off-center ridges defeat
        // tensor rules far from the origin, so the integral is partitioned
        // with plateau bumps,
        //
        //   1 = b(u3) + b(v)[1 - b(u3)] + [1 - b(u3)][1 - b(v)],  v = u1+u3,
        //
        // and each near-resonant term is integrated with its compact
        // direction on a finite rule. The companion coordinate uses a
        // uniform rule across the tabulated core (matching the fine grids of
        // [`LoopTables`]) plus a tangent-mapped tail.
        let taper = tables.ridge_window();
        let reach = tables.band_reach() - 2.0 * g;
        let plateau = 0.5 * taper;
        let span = tables.core_reach();
        // Seventh-order smoothstep taper: three vanishing derivatives at both
        // ends keep the panel rules high-order across the mask edges.
        let bump = |t: f64| {
            let a = t.abs();
            if a <= plateau {
                1.0
            } else if a >= taper {
                0.0
            } else {
                let x = (a - plateau) / (taper - plateau);
                let x4 = x * x * x * x;
                1.0 - x4 * (35.0 - 84.0 * x + 70.0 * x * x - 20.0 * x * x * x)
            }
        };
        let pi = core::f64::consts::PI;
        // Panel counts follow the Fourier phases so each panel sees a
        // bounded number of oscillation cycles.
        // Density floors keep the rules finer than the table grids, so the
        // interpolation error integrates as a stable bias instead of
        // aliasing against the node layout. The band rule runs across the
        // whole tabulated reach: the resonant-band tails only become
        // asymptotic far outside the core, so they are integrated honestly
        // and the fitted tail model covers just the region beyond the grids.
        let finite_panels = 40usize.max((taper * y2 / (2.0 * pi)) as usize + 4);
        let band_panels = 240usize.max((reach * y1 / (2.0 * pi)) as usize + 8);
        let finite = Rule::finite(-taper, taper, finite_panels, self.numerics.quad_order);
        let band = Rule::finite(-reach, reach, band_panels, self.numerics.quad_order);
        // Terms 1 and 2 keep a slow 1/u1^2 tail (the compact direction stays
        // resonant at any u1), so their outer integrals subtract a fitted
        // tail model and restore it in closed form.
        let probes = [reach, -reach, 0.5 * reach, -0.5 * reach];
        // Term 1: b(u3), coordinates (u1, u3), phases e^(-i u1 d) e^(i u3 y2).
        let inner1 = |u1: f64| {
            let mut inner = C64::new(0.0, 0.0);
            for (&u3, &w3) in finite.nodes.iter().zip(&finite.weights) {
                let weight = bump(u3);
                if weight > 0.0 {
                    inner += tables.amplitude_shifted(u1, u3)
                        * (weight * w3)
                        * C64::new(0.0, u3 * y2).exp();
                }
            }
            inner
        };
        // Term 2: b(v)[1 - b(u3)], coordinates (u1, v), phases
        // e^(-i u1 y1) e^(i v y2).
        let inner2 = |u1: f64| {
            let mut inner = C64::new(0.0, 0.0);
            for (&v, &wv) in finite.nodes.iter().zip(&finite.weights) {
                let u3 = v - u1;
                let weight = bump(v) * (1.0 - bump(u3));
                if weight > 0.0 {
                    inner += tables.amplitude_shifted(u1, u3)
                        * (weight * wv)
                        * C64::new(0.0, v * y2).exp();
                }
            }
            inner
        };
        // The peeled remainder decays like 1/u1^6, so truncating its
        // integral at the core span loses less than the interpolation floor;
        // the subtracted tail model is restored in closed form over the full
        // line (real profiles: the e^(-i u1 phase) transform conjugates).
        let outer = |inner: &dyn Fn(f64) -> C64, phase: f64| {
            let vals = [inner(probes[0]), inner(probes[1]), inner(probes[2]), inner(probes[3])];
            let peel = TailPeel::fit(&probes, &vals, g);
            let mut acc = C64::new(0.0, 0.0);
            for (&u1, &w1) in band.nodes.iter().zip(&band.weights) {
                acc += (inner(u1) - peel.profile(u1)) * C64::new(0.0, -u1 * phase).exp() * w1;
            }
            acc + peel.transform_neg(phase)
        };
        let t1 = outer(&inner1, d);
        let t2 = outer(&inner2, y1);
        // Term 3: both off-center ridges masked out. The remaining integrand
        // decays like 1/u^4 in every direction, so truncating at the core
        // span biases it far below the interpolation floor, and the finite
        // rules stay denser than the grids.
        let t3_panels = 96usize.max((span * d.max(y2) / (2.0 * pi)) as usize + 8);
        let t3_rule = Rule::finite(-span, span, t3_panels, self.numerics.quad_order);
        let mut t3 = C64::new(0.0, 0.0);
        for (&u1, &w1) in t3_rule.nodes.iter().zip(&t3_rule.weights) {
            let mut inner = C64::new(0.0, 0.0);
            for (&u3, &w3) in t3_rule.nodes.iter().zip(&t3_rule.weights) {
                let weight = (1.0 - bump(u3)) * (1.0 - bump(u1 + u3));
                if weight > 0.0 {
                    inner += tables.amplitude_shifted(u1, u3)
                        * (weight * w3)
                        * C64::new(0.0, u3 * y2).exp();
                }
            }
            t3 += inner * C64::new(0.0, -u1 * d).exp() * w1;
        }
        let damp = (-mu * y1).exp() / (4.0 * core::f64::consts::PI * core::f64::consts::PI);
        [t1 * damp, t2 * damp, t3 * damp]
    }

    /// Test-only hook: the three partition terms of the loop transform.
    #[doc(hidden)]
    pub fn debug_loop_parts(&self, y1: f64, y2: f64) -> [C64; 3] {
        self.phi3_loop_parts(y1, y2)
    }

    /// Three-photon-connected amplitude from the transport diagrams.
    pub fn phi3(&self, x1: f64, x2: f64, x3: f64) -> C64 {
        if self.params.num_atoms == 0 {
            return C64::new(0.0, 0.0);
        }
        // Canonical descending sort: the amplitude is fully symmetric, and a
        // fixed coordinate ordering makes that exact in floating point.
        let mut xs = [x1, x2, x3];
        xs.sort_unstable_by(|a, b| b.partial_cmp(a).expect("non-finite coordinate"));
        let y1 = xs[0] - xs[2];
        let y2 = xs[1] - xs[2];
        self.phi3_tree(y1, y2, &self.outer_rule, self.numerics.inner_circle_nodes)
            + self.phi3_loops(y1, y2)
    }

    /// Coherent-input two-photon wavefunction `t0^(2M) + phi2`.
    pub fn psi2(&self, x1: f64, x2: f64) -> C64 {
        C64::new(t0_pow(self.params.resonant_transmission(), 2 * self.params.num_atoms), 0.0)
            + self.phi2(x1, x2)
    }

    /// Coherent-input three-photon wavefunction
    /// `t0^(3M) + t0^M sum phi2 + phi3`.
    pub fn psi3(&self, x1: f64, x2: f64, x3: f64) -> C64 {
        let t0 = self.params.resonant_transmission();
        let m = self.params.num_atoms;
        let pair_sum = self.phi2(x1, x2) + self.phi2(x1, x3) + self.phi2(x2, x3);
        C64::new(t0_pow(t0, 3 * m), 0.0) + pair_sum * t0_pow(t0, m) + self.phi3(x1, x2, x3)
    }

    /// `phi2 / t0^(2M)`, the form entering the normalized correlators;
    /// computed in log space to stay finite at large optical depth.
    pub fn phi2_normalized(&self, x1: f64, x2: f64) -> Result<f64, CoreError> {
        let ratio = t0_pow_recip(self.params.resonant_transmission(), 2 * self.params.num_atoms)?;
        Ok(self.phi2(x1, x2).re * ratio)
    }

    /// `phi3 / t0^(3M)` (real part; the imaginary part of `phi3` vanishes
    /// analytically and is quadrature noise).
    pub fn phi3_normalized(&self, x1: f64, x2: f64, x3: f64) -> Result<f64, CoreError> {
        let ratio = t0_pow_recip(self.params.resonant_transmission(), 3 * self.params.num_atoms)?;
        Ok(self.phi3(x1, x2, x3).re * ratio)
    }


    /// Test-only hook: magnitude of the peeled outer integrand.
    #[doc(hidden)]
    pub fn debug_outer_integrand(&self, y1: f64, y2: f64, ps: &[f64]) -> Vec<(f64, f64)> {
        let g = self.params.gamma_tot;
        let d = y1 - y2;
        let w = 0.5 * g;
        let split = 1.2 * g;
        let big = self.numerics.peel_momentum * g;
        let nodes = self.numerics.inner_circle_nodes;
        let (ra_p, rb_p) = self.inner_tree_parts(big, d, nodes);
        let (ra_m, rb_m) = self.inner_tree_parts(-big, d, nodes);
        let sb_p = rb_p * (C64::new(0.0, -big * d)).exp();
        let sb_m = rb_m * (C64::new(0.0, big * d)).exp();
        let b2 = big * big;
        let c2a = (ra_p + ra_m) * (0.5 * b2);
        let c3a = (ra_p - ra_m) * (0.5 * b2 * big);
        let c2b = (sb_p + sb_m) * (0.5 * b2);
        let c3b = (sb_p - sb_m) * (0.5 * b2 * big);
        ps.iter()
            .map(|&p3| {
                let r1 = if p3.abs() <= split {
                    self.inner_tree_merged(p3, d, nodes)
                } else {
                    let (ra, rb) = self.inner_tree_parts(p3, d, nodes);
                    ra + rb
                };
                let lw = 1.0 / (p3 * p3 + w * w);
                let phase_d = C64::new(0.0, p3 * d).exp();
                let peel = (c2a + c2b * phase_d) * lw + (c3a + c3b * phase_d) * (p3 * lw * lw);
                (p3, (r1 - peel).norm())
            })
            .collect()
    }

    /// Compares every quadrature against a refined version at a set of probe
    /// separations and reports the worst relative deviation.
    pub fn convergence_check(&self) -> Result<f64, CoreError> {
        if self.params.num_atoms == 0 {
            return Ok(0.0);
        }
        let g = self.params.gamma_tot;
        let tol = self.numerics.convergence_tol;
        let mut worst = 0.0f64;
        let mut worst_est = C64::new(0.0, 0.0);
        for &x in &[0.0, 1.0 / g, 5.0 / g, 20.0 / g] {
            let a = self.phi2_sep(x, self.numerics.phi2_circle_nodes);
            let b = self.phi2_sep(x, 2 * self.numerics.phi2_circle_nodes);
            let err = (a - b).norm() / b.norm().max(1e-300);
            if err > worst {
                worst = err;
                worst_est = b;
            }
        }
        let fine = Rule::real_line(
            self.numerics.quad_scale * g,
            2 * self.numerics.outer_panels,
            self.numerics.quad_order,
        );

        for &(y1, y2) in &[(0.0, 0.0), (1.0, 0.4), (3.0, 1.0), (6.0, 2.0)] {
            let (y1, y2) = (y1 / g, y2 / g);
            let loop_part = self.phi3_loops(y1, y2);
            let coarse = self.phi3_tree(y1, y2, &self.outer_rule, self.numerics.inner_circle_nodes)
                + loop_part;
            let refined =
                self.phi3_tree(y1, y2, &fine, 2 * self.numerics.inner_circle_nodes) + loop_part;
            let err = (coarse - refined).norm() / refined.norm().max(1e-300);
            if err > worst {
                worst = err;
                worst_est = refined;
            }
        }
        if worst > tol {
            return Err(CoreError::QuadratureNonConvergent {
                estimate: worst_est,
                error: worst,
                tolerance: tol,
            });
        }
        Ok(worst)
    }
}

/// Four-order tail model of a slowly decaying line integrand,
///
/// ```text
/// peel(p) = a1/(p^2+w1^2) + a2/(p^2+w2^2) + b1 p/(p^2+w1^2)^2 + b2 p/(p^2+w2^2)^2
/// ```
///
/// fitted so that its `1/p^2 .. 1/p^5` expansion matches values measured at
/// four far probe momenta. Subtracting it leaves a `1/p^6` remainder; the
/// subtracted profiles have the closed-form transforms
/// `int dp e^(ipy)/(p^2+w^2) = (pi/w) e^(-wy)` and
/// `int dp e^(ipy) p/(p^2+w^2)^2 = (i pi y/(2w)) e^(-wy)` for `y >= 0`.
struct TailPeel {
    w1: f64,
    w2: f64,
    a1: C64,
    a2: C64,
    b1: C64,
    b2: C64,
}

impl TailPeel {
    /// `probes` must hold `[B, -B, B/2, -B/2]` with `values` the integrand
    /// samples there.
    fn fit(probes: &[f64; 4], values: &[C64; 4], gamma: f64) -> Self {
        let (w1, w2) = (0.5 * gamma, gamma);
        let big = probes[0];
        let b2 = big * big;
        // Even part E(p) = c2/p^2 + c4/p^4, odd part O(p) = c3/p^3 + c5/p^5.
        let e_full = (values[0] + values[1]) * 0.5;
        let o_full = (values[0] - values[1]) * 0.5;
        let e_half = (values[2] + values[3]) * 0.5;
        let o_half = (values[2] - values[3]) * 0.5;
        // Solve the 2x2 systems: E(B), E(B/2) pin (c2, c4); O(B), O(B/2)
        // pin (c3, c5).
        let c2 = (e_full * 16.0 - e_half) * b2 / 12.0;
        let c4 = (e_half - e_full * 4.0) * (b2 * b2) / 12.0;
        let c3 = (o_full * 32.0 - o_half) * (b2 * big) / 24.0;
        let c5 = (o_half - o_full * 8.0) * (b2 * b2 * big) / 24.0;
        // Match the Lorentzian family expansions:
        //   1/(p^2+w^2)   = z^2 - w^2 z^4 + ...
        //   p/(p^2+w^2)^2 = z^3 - 2 w^2 z^5 + ...
        let det_e = w2 * w2 - w1 * w1;
        let a1 = (c2 * (w2 * w2) + c4) / det_e;
        let a2 = c2 - a1;
        let det_o = 2.0 * (w2 * w2 - w1 * w1);
        let b1c = (c3 * 2.0 * (w2 * w2) + c5) / det_o;
        let b2c = c3 - b1c;
        Self { w1, w2, a1, a2, b1: b1c, b2: b2c }
    }

    fn profile(&self, p: f64) -> C64 {
        let l1 = 1.0 / (p * p + self.w1 * self.w1);
        let l2 = 1.0 / (p * p + self.w2 * self.w2);
        self.a1 * l1 + self.a2 * l2 + self.b1 * (p * l1 * l1) + self.b2 * (p * l2 * l2)
    }

    /// Closed-form `int dp profile(p) e^(ipy)` for `y >= 0`:
    ///   int dp e^(ipy)/(p^2+w^2)     = (pi/w) e^(-w y)
    ///   int dp e^(ipy) p/(p^2+w^2)^2 = (i pi y / (2w)) e^(-w y)
    fn transform(&self, y: f64) -> C64 {
        let pi = core::f64::consts::PI;
        let e1 = (-self.w1 * y).exp();
        let e2 = (-self.w2 * y).exp();
        self.a1 * (pi / self.w1) * e1
            + self.a2 * (pi / self.w2) * e2
            + self.b1 * C64::new(0.0, pi * y / (2.0 * self.w1)) * e1
            + self.b2 * C64::new(0.0, pi * y / (2.0 * self.w2)) * e2
    }

    /// Closed-form `int dp profile(p) e^(-ipy)` for `y >= 0`: the profiles
    /// are real, so only the basis transforms conjugate — the fitted
    /// coefficients do not.
    fn transform_neg(&self, y: f64) -> C64 {
        let pi = core::f64::consts::PI;
        let e1 = (-self.w1 * y).exp();
        let e2 = (-self.w2 * y).exp();
        self.a1 * (pi / self.w1) * e1
            + self.a2 * (pi / self.w2) * e2
            - self.b1 * C64::new(0.0, pi * y / (2.0 * self.w1)) * e1
            - self.b2 * C64::new(0.0, pi * y / (2.0 * self.w2)) * e2
    }
}

/// Mean of `f` over a circle scaled by the radius factor: the counterclockwise
/// contour integral `(1/2pi i) closed-int f(p) dp` on `|p - center| = r`,
/// i.e. the sum of residues enclosed. Spectrally accurate trapezoid rule.
fn circle_mean(center: C64, r: f64, nodes: usize, f: impl Fn(C64) -> C64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    let step = 2.0 * core::f64::consts::PI / nodes as f64;
    for k in 0..nodes {
        let phi = k as f64 * step;
        let dir = C64::new(phi.cos(), phi.sin());
        acc += f(center + dir * r) * dir;
    }
    acc * (r / nodes as f64)
}

/// `t0^n` with the magnitude computed in log space.
pub(crate) fn t0_pow(t0: f64, n: u32) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if t0 == 0.0 {
        return 0.0;
    }
    let mag = (n as f64 * t0.abs().ln()).exp();
    if t0 < 0.0 && n % 2 == 1 {
        -mag
    } else {
        mag
    }
}

/// `t0^(-n)` in log space, failing when the normalization is singular.
pub(crate) fn t0_pow_recip(t0: f64, n: u32) -> Result<f64, CoreError> {
    if t0.abs() < 1e-12 {
        return Err(CoreError::SingularNormalization { t0 });
    }
    if n == 0 {
        return Ok(1.0);
    }
    let mag = (-(n as f64) * t0.abs().ln()).exp();
    Ok(if t0 < 0.0 && n % 2 == 1 { -mag } else { mag })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn make(beta: f64, m: u32, loops: LoopMode) -> WavefieldEvaluator {
        let params = EnsembleParams { beta, num_atoms: m, gamma_tot: 1.0, drive_power: 0.02 };
        WavefieldEvaluator::new(params, NumericsConfig::default(), loops).unwrap()
    }

    /// Exact single-atom results derived from the weak-drive trajectory
    /// expansion of the master equation:
    ///   phi2(x) = -(2 beta)^2 exp(-gamma |x| / 2)
    ///   phi3(x1,x2,x3) = 2 (t0 - 1)^3 exp(-gamma (max - min) / 2)
    #[test]
    fn phi2_single_atom_closed_form() {
        let ev = make(0.07, 1, LoopMode::Off);
        for &x in &[0.0, 0.3, 1.0, 2.7, 6.0, 12.0, 30.0, 44.0] {
            let expect = -4.0 * 0.07f64.powi(2) * (-0.5 * x).exp();
            let got = ev.phi2_direct(x, 0.0).re;
            assert!(
                (got - expect).abs() < 1e-10 * expect.abs().max(1e-12),
                "x={x}: {got} vs {expect}"
            );
            // table path agrees to interpolation error
            assert!((ev.phi2(x, 0.0).re - expect).abs() < 1e-8 * expect.abs().max(1e-12));
        }
    }

    #[test]
    fn phi3_single_atom_closed_form() {
        let ev = make(0.06, 1, LoopMode::Off);
        let u = 2.0 * 0.06f64;
        for &(a, b, c) in &[
            (0.0, 0.0, 0.0),
            (1.0, 0.5, 0.0),
            (2.0, 2.0, 0.0),
            (0.3, 1.9, 1.1),
            (4.0, 0.7, 0.0),
            (9.0, 3.0, 0.0),
        ] {
            let spread: f64 = {
                let mx: f64 = a.max(b).max(c);
                let mn: f64 = a.min(b).min(c);
                mx - mn
            };
            let expect = -2.0 * u.powi(3) * (-0.5 * spread).exp();
            let got = ev.phi3(a, b, c);
            assert!(
                (got.re - expect).abs() < 1e-9 * expect.abs(),
                "({a},{b},{c}): {} vs {expect}",
                got.re
            );
            assert!(got.im.abs() < 1e-9 * expect.abs());
        }
    }

    #[test]
    fn phi2_zero_atoms_vanishes() {
        let ev = make(0.05, 0, LoopMode::Off);
        assert_eq!(ev.phi2(1.0, 0.0), C64::new(0.0, 0.0));
        assert_eq!(ev.phi3(1.0, 0.5, 0.0), C64::new(0.0, 0.0));
        assert_eq!(ev.psi3(1.0, 0.5, 0.0), C64::new(1.0, 0.0));
    }

    #[test]
    fn phi2_symmetry_and_translation_exact() {
        let ev = make(0.05, 3, LoopMode::Off);
        assert_eq!(ev.phi2(0.7, 2.0), ev.phi2(2.0, 0.7));
        let shifted = ev.phi2(0.7 + 5.0, 2.0 + 5.0);
        assert!((ev.phi2(0.7, 2.0) - shifted).norm() < 1e-12);
    }

    #[test]
    fn phi3_permutation_symmetry_exact() {
        let ev = make(0.05, 2, LoopMode::Off);
        let (a, b, c) = (0.9, 0.2, 1.7);
        let base = ev.phi3(a, b, c);
        assert_eq!(ev.phi3(b, a, c), base);
        assert_eq!(ev.phi3(c, a, b), base);
        assert_eq!(ev.phi3(c, b, a), base);
        // translation invariance up to rounding of the separations
        let shifted = ev.phi3(a + 3.0, b + 3.0, c + 3.0);
        assert!((shifted - base).norm() < 1e-10 * base.norm());
    }

    #[test]
    fn phi3_cluster_decomposition() {
        let ev = make(0.05, 2, LoopMode::Off);
        let origin = ev.phi3(0.0, 0.0, 0.0).re.abs();
        let far = ev.phi3(0.0, 0.0, 30.0).re.abs();
        assert!(far < 1e-3 * origin, "far/origin = {:.2e}", far / origin);
    }

    #[test]
    fn psi3_separated_photons_approach_background() {
        let ev = make(0.05, 2, LoopMode::Off);
        let t0 = 0.9f64;
        let expect = t0.powi(6);
        let got = ev.psi3(0.0, 15.0, 30.0).re;
        assert!((got - expect).abs() < 1e-3 * expect);
    }

    #[test]
    fn gamma_rescaling_leaves_values_unchanged() {
        let p1 = EnsembleParams { beta: 0.05, num_atoms: 2, gamma_tot: 1.0, drive_power: 0.0 };
        let p2 = EnsembleParams { beta: 0.05, num_atoms: 2, gamma_tot: 3.0, drive_power: 0.0 };
        let e1 = WavefieldEvaluator::new(p1, NumericsConfig::default(), LoopMode::Off).unwrap();
        let e2 = WavefieldEvaluator::new(p2, NumericsConfig::default(), LoopMode::Off).unwrap();
        for &x in &[0.0, 0.8, 3.0] {
            let a = e1.phi2_direct(x, 0.0).re;
            let b = e2.phi2_direct(x / 3.0, 0.0).re;
            assert!((a - b).abs() < 1e-10 * a.abs().max(1e-12));
        }
        let a = e1.phi3(2.0, 1.0, 0.0).re;
        let b = e2.phi3(2.0 / 3.0, 1.0 / 3.0, 0.0).re;
        assert!((a - b).abs() < 1e-8 * a.abs());
    }

    #[test]
    fn loop_mode_resolution() {
        assert!(LoopMode::Auto.resolve(0.05));
        assert!(!LoopMode::Auto.resolve(0.01));
        assert!(LoopMode::On.resolve(0.001));
        assert!(!LoopMode::Off.resolve(0.5));
    }

    #[test]
    fn loops_shift_phi3_slightly() {
        let with = make(0.05, 3, LoopMode::On);
        let without = make(0.05, 3, LoopMode::Off);
        let a = with.phi3(0.0, 0.0, 0.0).re;
        let b = without.phi3(0.0, 0.0, 0.0).re;
        let rel = (a - b).abs() / b.abs();
        assert!(rel > 1e-6, "loops had no effect");
        assert!(rel < 0.2, "loop correction suspiciously large: {rel}");
    }

    #[test]
    fn t0_power_helpers() {
        assert_eq!(t0_pow(0.9, 0), 1.0);
        assert!((t0_pow(0.9, 16) - 0.9f64.powi(16)).abs() < 1e-15);
        assert!((t0_pow(-0.2, 3) - (-0.008)).abs() < 1e-17);
        assert!((t0_pow_recip(0.9, 4).unwrap() - 0.9f64.powi(-4)).abs() < 1e-12);
        assert!(matches!(
            t0_pow_recip(0.0, 2),
            Err(CoreError::SingularNormalization { .. })
        ));
    }
}
