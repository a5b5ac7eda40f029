//! Gaussian domains and γ-weighted quadrature rules.
//!
//! A [`GaussianDomain`] couples a geometric description (half-space,
//! interval, or a 2D staircase grid) with its Gaussian measure and a
//! quadrature rule whose weights carry the density, so that
//! Σ wᵢ f(xᵢ) ≈ ∫ f dγ. Dirichlet domains must have γ(Ω) < 1; the full
//! space (a half-space with λ = -∞) is allowed only as the ground space
//! of the Ornstein–Uhlenbeck semigroup.
//!
//! Half-space and interval rules are affine-mapped Gauss–Legendre panels
//! against the explicit density rather than truncated Gauss–Hermite:
//! Dirichlet cut-offs break Hermite orthogonality, while panel rules keep
//! the error uniformly small on the truncated support. A plain
//! Gauss–Hermite rule is still available for full-line integrals where
//! polynomial exactness matters.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::gauss::{gaussian_density, phi_tail};
use crate::tridiag::SymTridiag;

/// Support truncation for unbounded 1D domains; γ((12, ∞)) < 1e-31.
pub const TRUNCATION_RADIUS: f64 = 12.0;
/// Truncation for 2D tensor rules; keeps node counts at desk scale while
/// the discarded mass stays below 1e-15.
pub const TRUNCATION_RADIUS_2D: f64 = 8.0;
/// Target panel width for composite Gauss–Legendre rules.
const PANEL_WIDTH: f64 = 0.75;

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    xs: Vec<f64>,
    /// Second coordinates for 2D rules, aligned with `xs`.
    ys: Option<Vec<f64>>,
    weights: Vec<f64>,
    order: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> Option<&[f64]> {
        self.ys.as_deref()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> u8 {
        if self.ys.is_some() {
            2
        } else {
            1
        }
    }

    /// Node coordinates as a fixed-size buffer (second entry 0 in 1D).
    #[inline]
    pub fn node(&self, i: usize) -> [f64; 2] {
        match &self.ys {
            Some(ys) => [self.xs[i], ys[i]],
            None => [self.xs[i], 0.0],
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// γ-integral of `f` over the rule's support.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        match &self.ys {
            None => self
                .xs
                .iter()
                .zip(&self.weights)
                .map(|(&x, &w)| w * f(&[x]))
                .sum(),
            Some(ys) => self
                .xs
                .iter()
                .zip(ys)
                .zip(&self.weights)
                .map(|((&x, &y), &w)| w * f(&[x, y]))
                .sum(),
        }
    }

    /// Probabilists' Gauss–Hermite rule: integrates polynomials of degree
    /// up to 2·order - 1 exactly against γ on the full line (Golub–Welsch
    /// on the Jacobi matrix with off-diagonal √k, total mass 1).
    pub fn gauss_hermite(order: usize) -> Result<QuadratureRule> {
        if order < 2 {
            return Err(Error::config(format!("Gauss-Hermite order {order} < 2")));
        }
        let off: Vec<f64> = (1..order).map(|k| (k as f64).sqrt()).collect();
        let jacobi = SymTridiag::new(vec![0.0; order], off);
        let (mut nodes, vecs) = jacobi.lowest_eigenpairs(order);
        let mut weights: Vec<f64> = vecs.iter().map(|v| v[0] * v[0]).collect();
        symmetrize_rule(&mut nodes, &mut weights);
        Ok(QuadratureRule {
            xs: nodes,
            ys: None,
            weights,
            order,
        })
    }

    fn from_parts(xs: Vec<f64>, ys: Option<Vec<f64>>, weights: Vec<f64>, order: usize) -> Self {
        QuadratureRule { xs, ys, weights, order }
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1] (Golub–Welsch).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let off: Vec<f64> = (1..n)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    let jacobi = SymTridiag::new(vec![0.0; n], off);
    let (mut nodes, vecs) = jacobi.lowest_eigenpairs(n);
    let mut weights: Vec<f64> = vecs.iter().map(|v| 2.0 * v[0] * v[0]).collect();
    symmetrize_rule(&mut nodes, &mut weights);
    (nodes, weights)
}

/// Enforce the exact ± symmetry of Hermite/Legendre rules: average mirrored
/// node pairs and weights, pin the middle node of odd rules to 0.
fn symmetrize_rule(nodes: &mut [f64], weights: &mut [f64]) {
    let n = nodes.len();
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        nodes[i] = -x;
        nodes[j] = x;
        let w = 0.5 * (weights[i] + weights[j]);
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
}

const GL_CACHE_MAX: usize = 64;
static GL_TABLES: [std::sync::OnceLock<(Vec<f64>, Vec<f64>)>; GL_CACHE_MAX + 1] =
    [const { std::sync::OnceLock::new() }; GL_CACHE_MAX + 1];

/// Cached Gauss–Legendre table; the rule construction costs an eigensolve,
/// which must not sit inside quadrature inner loops.
pub fn gauss_legendre_cached(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && n <= GL_CACHE_MAX, "GL cache covers orders 1..=64");
    GL_TABLES[n].get_or_init(|| gauss_legendre(n))
}

/// Composite Gauss–Legendre panel rule for ∫_lo^hi f dγ in one dimension.
/// `gl_order` nodes per panel, panel width at most `PANEL_WIDTH`.
pub(crate) fn panel_rule_1d(lo: f64, hi: f64, gl_order: usize) -> (Vec<f64>, Vec<f64>) {
    let span = hi - lo;
    let panels = ((span / PANEL_WIDTH).ceil() as usize).max(8);
    let (gx, gw) = gauss_legendre_cached(gl_order);
    let mut xs = Vec::with_capacity(panels * gl_order);
    let mut ws = Vec::with_capacity(panels * gl_order);
    for p in 0..panels {
        let a = lo + span * p as f64 / panels as f64;
        let b = lo + span * (p + 1) as f64 / panels as f64;
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (&x, &w) in gx.iter().zip(gw) {
            let node = mid + half * x;
            xs.push(node);
            ws.push(half * w * gaussian_density(node));
        }
    }
    (xs, ws)
}

fn gl_order_from(order: usize) -> usize {
    order.div_euclid(4).clamp(2, 48)
}

#[derive(Debug, Clone)]
pub struct Grid2dGeometry {
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    /// Interior-node index per lattice site (row-major i·ny + j), -1 if the
    /// site is outside the staircase set.
    pub index: Vec<i64>,
}

impl Grid2dGeometry {
    #[inline]
    pub fn site(&self, i: usize, j: usize) -> i64 {
        self.index[i * self.ny + j]
    }

    #[inline]
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.x0 + self.h * (i as f64 + 1.0),
            self.y0 + self.h * (j as f64 + 1.0),
        )
    }
}

#[derive(Debug, Clone)]
pub enum DomainKind {
    /// {x₁ > λ} in ℝ^dim; λ = -∞ denotes the full space.
    HalfSpace { lambda: f64 },
    /// Open interval (a, b) ⊂ ℝ; endpoints may be infinite (not both).
    Interval { a: f64, b: f64 },
    /// Staircase-gridded open subset of ℝ².
    Grid2d(Grid2dGeometry),
}

#[derive(Debug, Clone)]
pub struct GaussianDomain {
    kind: DomainKind,
    dim: u8,
    measure: f64,
    quad: QuadratureRule,
}

impl GaussianDomain {
    pub fn kind(&self) -> &DomainKind {
        &self.kind
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    /// γ(Ω). Analytic (Φ-based) for half-spaces and intervals, the node
    /// weight sum for staircase grids.
    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    pub fn is_full_space(&self) -> bool {
        matches!(self.kind, DomainKind::HalfSpace { lambda } if lambda == f64::NEG_INFINITY)
    }

    pub fn is_half_space_at_zero(&self) -> bool {
        matches!(self.kind, DomainKind::HalfSpace { lambda } if lambda == 0.0)
    }

    pub fn nodes_1d(&self) -> Result<&[f64]> {
        if self.dim != 1 {
            return Err(Error::config("expected a one-dimensional domain"));
        }
        Ok(self.quad.xs())
    }

    pub fn full_line(order: usize) -> Arc<GaussianDomain> {
        let kind = DomainKind::HalfSpace { lambda: f64::NEG_INFINITY };
        let quad = build_quadrature_kind(&kind, 1, order).expect("full-line rule");
        Arc::new(GaussianDomain { kind, dim: 1, measure: 1.0, quad })
    }

    pub fn half_line(lambda: f64, order: usize) -> Result<Arc<GaussianDomain>> {
        if !lambda.is_finite() {
            return Err(Error::domain("half-space boundary must be finite"));
        }
        let kind = DomainKind::HalfSpace { lambda };
        let quad = build_quadrature_kind(&kind, 1, order)?;
        Ok(Arc::new(GaussianDomain {
            kind,
            dim: 1,
            measure: phi_tail(lambda),
            quad,
        }))
    }

    pub fn interval(a: f64, b: f64, order: usize) -> Result<Arc<GaussianDomain>> {
        if !(a < b) {
            return Err(Error::domain(format!("empty interval ({a}, {b})")));
        }
        if a == f64::NEG_INFINITY && b == f64::INFINITY {
            return Err(Error::domain("interval covering the whole line has measure 1"));
        }
        let kind = DomainKind::Interval { a, b };
        let quad = build_quadrature_kind(&kind, 1, order)?;
        Ok(Arc::new(GaussianDomain {
            kind,
            dim: 1,
            measure: phi_tail(a) - phi_tail(b),
            quad,
        }))
    }

    pub fn full_plane(order: usize) -> Arc<GaussianDomain> {
        let kind = DomainKind::HalfSpace { lambda: f64::NEG_INFINITY };
        let quad = build_quadrature_kind(&kind, 2, order).expect("full-plane rule");
        Arc::new(GaussianDomain { kind, dim: 2, measure: 1.0, quad })
    }

    pub fn half_plane(lambda: f64, order: usize) -> Result<Arc<GaussianDomain>> {
        if !lambda.is_finite() {
            return Err(Error::domain("half-space boundary must be finite"));
        }
        let kind = DomainKind::HalfSpace { lambda };
        let quad = build_quadrature_kind(&kind, 2, order)?;
        Ok(Arc::new(GaussianDomain {
            kind,
            dim: 2,
            measure: phi_tail(lambda),
            quad,
        }))
    }

    /// Staircase grid over the box (x0, x1) × (y0, y1) with spacing `h`;
    /// interior lattice sites are kept where `inside` holds. Curved
    /// boundaries are approximated by node inclusion.
    pub fn grid2d(
        x_range: (f64, f64),
        y_range: (f64, f64),
        h: f64,
        inside: impl Fn(f64, f64) -> bool,
    ) -> Result<Arc<GaussianDomain>> {
        let (x0, x1) = x_range;
        let (y0, y1) = y_range;
        if !(x0 < x1 && y0 < y1) || !h.is_finite() || h <= 0.0 {
            return Err(Error::domain("invalid grid2d box or spacing"));
        }
        let nx = ((x1 - x0) / h).round() as usize;
        let ny = ((y1 - y0) / h).round() as usize;
        if nx < 2 || ny < 2 {
            return Err(Error::config("grid2d needs at least 2 interior nodes per axis"));
        }
        let (nx, ny) = (nx - 1, ny - 1);
        let mut index = vec![-1i64; nx * ny];
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut ws = Vec::new();
        let mut count = 0i64;
        // exact γ-mass of the h×h cell around each kept node
        let cell_mass = |c: f64| phi_tail(c - 0.5 * h) - phi_tail(c + 0.5 * h);
        for i in 0..nx {
            for j in 0..ny {
                let x = x0 + h * (i as f64 + 1.0);
                let y = y0 + h * (j as f64 + 1.0);
                if inside(x, y) {
                    index[i * ny + j] = count;
                    count += 1;
                    xs.push(x);
                    ys.push(y);
                    ws.push(cell_mass(x) * cell_mass(y));
                }
            }
        }
        if count == 0 {
            return Err(Error::config("grid2d mask excludes every node"));
        }
        let measure: f64 = ws.iter().sum();
        let quad = QuadratureRule::from_parts(xs, Some(ys), ws, nx.max(ny));
        Ok(Arc::new(GaussianDomain {
            kind: DomainKind::Grid2d(Grid2dGeometry { x0, y0, h, nx, ny, index }),
            dim: 2,
            measure,
            quad,
        }))
    }

    /// Rehydrate a staircase domain from serialized geometry and rule parts.
    pub(crate) fn from_grid_2d(
        geom: Grid2dGeometry,
        xs: Vec<f64>,
        ys: Vec<f64>,
        ws: Vec<f64>,
    ) -> Arc<GaussianDomain> {
        let measure: f64 = ws.iter().sum();
        let order = geom.nx.max(geom.ny);
        Arc::new(GaussianDomain {
            kind: DomainKind::Grid2d(geom),
            dim: 2,
            measure,
            quad: QuadratureRule::from_parts(xs, Some(ys), ws, order),
        })
    }

    /// Full-line domain over an explicit (mirrored) node set; used for odd
    /// extensions so that restriction back to the half-space is lossless.
    pub(crate) fn from_mirrored_nodes(xs: Vec<f64>, ws: Vec<f64>) -> Arc<GaussianDomain> {
        let order = xs.len();
        Arc::new(GaussianDomain {
            kind: DomainKind::HalfSpace { lambda: f64::NEG_INFINITY },
            dim: 1,
            measure: 1.0,
            quad: QuadratureRule::from_parts(xs, None, ws, order),
        })
    }

    /// Wrap a 1D finite-difference grid (interior nodes + cell γ-masses) as
    /// a domain. Weights are rescaled so they sum to the analytic measure,
    /// which keeps rearranged profiles from different discretizations of
    /// the same geometry on a common measure axis.
    pub(crate) fn from_grid_1d(kind: DomainKind, xs: Vec<f64>, mut ws: Vec<f64>) -> Arc<GaussianDomain> {
        let measure = match kind {
            DomainKind::HalfSpace { lambda } => phi_tail(lambda),
            DomainKind::Interval { a, b } => phi_tail(a) - phi_tail(b),
            DomainKind::Grid2d(_) => unreachable!("from_grid_1d is one-dimensional"),
        };
        let total: f64 = ws.iter().sum();
        if total > 0.0 {
            let scale = measure / total;
            // skip the no-op rescale so serialized rules reload bit-exactly
            if (scale - 1.0).abs() > 1e-12 {
                for w in ws.iter_mut() {
                    *w *= scale;
                }
            }
        }
        let order = xs.len();
        Arc::new(GaussianDomain {
            kind,
            dim: 1,
            measure,
            quad: QuadratureRule::from_parts(xs, None, ws, order),
        })
    }
}

/// Build a fresh γ-quadrature for a domain geometry. Half-space and
/// interval kinds get composite Gauss–Legendre panels on the truncated
/// support; staircase grids carry their own intrinsic rule.
pub fn build_quadrature(domain: &GaussianDomain, order: usize) -> Result<QuadratureRule> {
    match &domain.kind {
        DomainKind::Grid2d(_) => Ok(domain.quad.clone()),
        kind => build_quadrature_kind(kind, domain.dim, order),
    }
}

fn build_quadrature_kind(kind: &DomainKind, dim: u8, order: usize) -> Result<QuadratureRule> {
    if order < 2 {
        return Err(Error::config(format!("quadrature order {order} < 2")));
    }
    let gl = gl_order_from(order);
    match (kind, dim) {
        (DomainKind::HalfSpace { lambda }, 1) => {
            let lo = lambda.max(-TRUNCATION_RADIUS);
            if lo >= TRUNCATION_RADIUS {
                return Err(Error::domain("half-space support beyond truncation radius"));
            }
            let (xs, mut ws) = panel_rule_1d(lo, TRUNCATION_RADIUS, gl);
            rescale(&mut ws, phi_tail(*lambda));
            Ok(QuadratureRule::from_parts(xs, None, ws, order))
        }
        (DomainKind::Interval { a, b }, 1) => {
            let lo = a.max(-TRUNCATION_RADIUS);
            let hi = b.min(TRUNCATION_RADIUS);
            if lo >= hi {
                return Err(Error::domain("interval support beyond truncation radius"));
            }
            let (xs, mut ws) = panel_rule_1d(lo, hi, gl);
            rescale(&mut ws, phi_tail(*a) - phi_tail(*b));
            Ok(QuadratureRule::from_parts(xs, None, ws, order))
        }
        (DomainKind::HalfSpace { lambda }, 2) => {
            let lo = lambda.max(-TRUNCATION_RADIUS_2D);
            if lo >= TRUNCATION_RADIUS_2D {
                return Err(Error::domain("half-plane support beyond truncation radius"));
            }
            let gl2 = order.div_euclid(8).clamp(2, 16);
            let (xs1, ws1) = panel_rule_1d(lo, TRUNCATION_RADIUS_2D, gl2);
            let (xs2, ws2) = panel_rule_1d(-TRUNCATION_RADIUS_2D, TRUNCATION_RADIUS_2D, gl2);
            let mut xs = Vec::with_capacity(xs1.len() * xs2.len());
            let mut ys = Vec::with_capacity(xs1.len() * xs2.len());
            let mut ws = Vec::with_capacity(xs1.len() * xs2.len());
            for (&x, &wx) in xs1.iter().zip(&ws1) {
                for (&y, &wy) in xs2.iter().zip(&ws2) {
                    xs.push(x);
                    ys.push(y);
                    ws.push(wx * wy);
                }
            }
            rescale(&mut ws, phi_tail(*lambda));
            Ok(QuadratureRule::from_parts(xs, Some(ys), ws, order))
        }
        (DomainKind::Interval { .. }, 2) => {
            Err(Error::config("interval domains are one-dimensional"))
        }
        (DomainKind::Grid2d(_), _) => Err(Error::config(
            "grid2d rules are intrinsic; use the domain's stored quadrature",
        )),
        (_, d) => Err(Error::config(format!("unsupported dimension {d}"))),
    }
}

fn rescale(ws: &mut [f64], target: f64) {
    let total: f64 = ws.iter().sum();
    if total > 0.0 && target > 0.0 {
        let scale = target / total;
        for w in ws.iter_mut() {
            *w *= scale;
        }
    }
}
