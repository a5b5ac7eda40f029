//! Dirichlet eigen-decompositions of the Ornstein–Uhlenbeck operator
//! L = -Δ + x·∇ and the spectral calculus built on them.
//!
//! Eigenpairs solve the symmetric weak form ∫ φ ∇ψ·∇v = λ ∫ φ ψ v over the
//! domain. The 1D discretization is a divergence-form finite-volume scheme
//! -(φ u')' = λ φ u on a graded grid clustered where the density is largest;
//! it is symmetrized with the cell γ-masses, which keeps the discrete
//! spectrum real and the discrete eigenfields exactly γ-orthonormal. The 2D
//! staircase discretization uses the 5-point analogue with exact face and
//! cell masses, solved by subspace iteration on A⁻¹B (shift-invert at 0)
//! with a banded Cholesky factor.
//!
//! Fractional powers act diagonally: L^σ u = Σ λ_k^σ ⟨u, ψ_k⟩ ψ_k, the
//! fractional norm is ‖u‖_{H^s}² = Σ λ_k^s ⟨u, ψ_k⟩², and the Dirichlet
//! semigroup is e^{-tL} u = Σ e^{-λ_k t} ⟨u, ψ_k⟩ ψ_k.

use std::sync::Arc;

use crate::banded::{jacobi_eigen, BandedSpd};
use crate::domain::{panel_rule_1d, DomainKind, GaussianDomain, Grid2dGeometry, TRUNCATION_RADIUS};
use crate::error::{Error, Result};
use crate::field::GridField;
use crate::gauss::{gaussian_density, phi_tail};
use crate::hermite::hermite_he;
use crate::tridiag::SymTridiag;

/// Spectral-truncation diagnostics attached to every spectral operation.
#[derive(Debug, Clone, Copy, Default)]
pub struct SpectralDiagnostics {
    /// Fraction of ‖u‖² outside the resolved span.
    pub tail_fraction: f64,
    /// Raised when the tail exceeds 1% of ‖u‖².
    pub truncation_warning: bool,
}

/// A spectral operation result: the field plus its truncation diagnostics.
#[derive(Debug, Clone)]
pub struct SpectralField {
    pub field: GridField,
    pub diagnostics: SpectralDiagnostics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// Finite-volume eigenpairs.
    Numeric,
    /// Odd probabilists' Hermite eigenbasis of the half-line {x > 0}:
    /// ψ_k ∝ He_{2k-1}, λ_k = 2k - 1. Evaluable off-grid.
    AnalyticOddHermite,
}

#[derive(Debug, Clone)]
pub struct SpectralModel {
    domain: Arc<GaussianDomain>,
    eigenvalues: Vec<f64>,
    /// Row k holds ψ_k on the domain's quadrature nodes; γ-orthonormal.
    eigenfields: Vec<Vec<f64>>,
    basis: BasisKind,
}

/// Share of uniform spacing in the graded 1D grid; the rest follows the
/// Gaussian mass so nodes cluster where φ is largest.
const GRADING_UNIFORM_SHARE: f64 = 0.5;
/// Heuristic resolvability requirement: ten nodes per oscillation of the
/// K-th mode.
const NODES_PER_MODE: usize = 10;
/// Tail-energy fraction that raises the truncation warning.
const TAIL_WARNING_FRACTION: f64 = 0.01;

impl SpectralModel {
    pub fn domain(&self) -> &Arc<GaussianDomain> {
        &self.domain
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn basis(&self) -> BasisKind {
        self.basis
    }

    /// ψ_k sampled on the quadrature nodes.
    pub fn mode_values(&self, k: usize) -> &[f64] {
        &self.eigenfields[k]
    }

    pub fn mode_field(&self, k: usize) -> GridField {
        GridField::from_values(
            Arc::clone(&self.domain),
            format!("psi{}", k + 1),
            self.eigenfields[k].clone(),
        )
        .expect("mode aligned with domain")
    }

    /// Analytic evaluation of ψ_k at an arbitrary point (analytic basis only).
    pub fn eval_mode(&self, k: usize, x: f64) -> Option<f64> {
        match self.basis {
            BasisKind::AnalyticOddHermite => Some(odd_hermite_mode(k, x)),
            BasisKind::Numeric => None,
        }
    }

    /// x-derivative of ψ_k (analytic basis only).
    pub fn eval_mode_dx(&self, k: usize, x: f64) -> Option<f64> {
        match self.basis {
            BasisKind::AnalyticOddHermite => {
                let deg = 2 * k + 1;
                let norm = halfline_mode_norm(k);
                Some(deg as f64 * hermite_he(deg - 1, x) / norm)
            }
            BasisKind::Numeric => None,
        }
    }

    /// Spectral coefficients ⟨u, ψ_k⟩ for k < K.
    pub fn coefficients(&self, u: &GridField) -> Result<Vec<f64>> {
        let w = self.domain.quadrature().weights();
        if u.len() != w.len() || !u.same_grid(&self.mode_field(0)) {
            return Err(Error::config("field is not sampled on the model grid"));
        }
        Ok(self
            .eigenfields
            .iter()
            .map(|psi| {
                psi.iter()
                    .zip(u.values())
                    .zip(w)
                    .map(|((p, v), w)| w * p * v)
                    .sum()
            })
            .collect())
    }

    /// Σ c_k ψ_k as a field on the model grid.
    pub fn reconstruct(&self, coeffs: &[f64], label: impl Into<String>) -> GridField {
        let n = self.domain.quadrature().len();
        let mut values = vec![0.0; n];
        for (c, psi) in coeffs.iter().zip(&self.eigenfields) {
            for (v, p) in values.iter_mut().zip(psi) {
                *v += c * p;
            }
        }
        GridField::from_values(Arc::clone(&self.domain), label, values).expect("aligned")
    }

    fn diagnostics_for(&self, u: &GridField, coeffs: &[f64]) -> SpectralDiagnostics {
        let norm_sq: f64 = u
            .values()
            .iter()
            .zip(self.domain.quadrature().weights())
            .map(|(v, w)| w * v * v)
            .sum();
        let captured: f64 = coeffs.iter().map(|c| c * c).sum();
        let tail = if norm_sq > 0.0 {
            ((norm_sq - captured) / norm_sq).max(0.0)
        } else {
            0.0
        };
        SpectralDiagnostics {
            tail_fraction: tail,
            truncation_warning: tail > TAIL_WARNING_FRACTION,
        }
    }
}

/// Dirichlet eigenpairs of L on the domain: lowest `k` modes at the given
/// grid resolution (interior nodes per axis for 1D; staircase domains carry
/// their own grid and ignore `resolution`).
pub fn build_spectral_model(
    domain: &Arc<GaussianDomain>,
    k: usize,
    resolution: usize,
) -> Result<SpectralModel> {
    if k < 1 {
        return Err(Error::config("need at least one mode"));
    }
    if domain.is_full_space() {
        return Err(Error::config("Dirichlet model needs γ(Ω) < 1, not the full space"));
    }
    match domain.kind() {
        DomainKind::HalfSpace { lambda } => build_1d(*lambda, f64::INFINITY, k, resolution),
        DomainKind::Interval { a, b } => build_1d(*a, *b, k, resolution),
        DomainKind::Grid2d(geom) => build_2d(domain, geom, k),
    }
}

/// Analytic odd-Hermite model of the half-line {x > 0}: λ_k = 2k - 1 with
/// ψ_k = He_{2k-1}/√((2k-1)!/2), sampled on a panel rule whose support
/// extends past the K-th mode's turning point √(8K - 2).
pub fn analytic_halfline_model(k: usize, order: usize) -> Result<SpectralModel> {
    if k < 1 {
        return Err(Error::config("need at least one mode"));
    }
    let degree = 2 * k - 1;
    let support = (4.0 * degree as f64 + 2.0).sqrt() + 4.0;
    let gl = order.div_euclid(4).clamp(4, 48);
    let (xs, ws) = panel_rule_1d(0.0, support.max(TRUNCATION_RADIUS), gl);
    let domain = GaussianDomain::from_grid_1d(DomainKind::HalfSpace { lambda: 0.0 }, xs, ws);
    let eigenvalues: Vec<f64> = (0..k).map(|j| (2 * j + 1) as f64).collect();
    let eigenfields: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            domain
                .quadrature()
                .xs()
                .iter()
                .map(|&x| odd_hermite_mode(j, x))
                .collect()
        })
        .collect();
    Ok(SpectralModel {
        domain,
        eigenvalues,
        eigenfields,
        basis: BasisKind::AnalyticOddHermite,
    })
}

fn halfline_mode_norm(k: usize) -> f64 {
    // ‖He_{2k+1}‖²_{L²((0,∞),γ)} = (2k+1)!/2
    (libm::tgamma(2.0 * k as f64 + 2.0) / 2.0).sqrt()
}

fn odd_hermite_mode(k: usize, x: f64) -> f64 {
    hermite_he(2 * k + 1, x) / halfline_mode_norm(k)
}

/// Monotone node map for the graded 1D grid: a blend of uniform spacing and
/// Gaussian-mass spacing, inverted by bisection.
fn graded_nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let theta = GRADING_UNIFORM_SHARE;
    let (tail_lo, tail_hi) = (phi_tail(lo), phi_tail(hi));
    let mass = tail_lo - tail_hi;
    let map = |x: f64| theta * (x - lo) / (hi - lo) + (1.0 - theta) * (tail_lo - phi_tail(x)) / mass;
    let mut xs = Vec::with_capacity(n + 2);
    xs.push(lo);
    for i in 1..=n {
        let target = i as f64 / (n + 1) as f64;
        let (mut a, mut b) = (lo, hi);
        for _ in 0..80 {
            let mid = 0.5 * (a + b);
            if map(mid) < target {
                a = mid;
            } else {
                b = mid;
            }
        }
        xs.push(0.5 * (a + b));
    }
    xs.push(hi);
    xs
}

/// Graded finite-volume grid over a 1D geometry with exact cell γ-masses as
/// weights: the discretization both the eigensolver and the rearrangement
/// oracles live on.
pub fn grid_domain_1d(a: f64, b: f64, resolution: usize) -> Result<Arc<GaussianDomain>> {
    let lo = a.max(-TRUNCATION_RADIUS);
    let hi = b.min(TRUNCATION_RADIUS);
    if !(lo < hi) {
        return Err(Error::domain("domain support beyond truncation radius"));
    }
    let n = resolution.max(2);
    let xs = graded_nodes(lo, hi, n);
    let mids: Vec<f64> = (0..=n).map(|j| 0.5 * (xs[j] + xs[j + 1])).collect();
    let mut w = vec![0.0; n];
    for i in 1..=n {
        let cell_lo = if i == 1 { xs[0] } else { mids[i - 1] };
        let cell_hi = if i == n { xs[n + 1] } else { mids[i] };
        w[i - 1] = phi_tail(cell_lo) - phi_tail(cell_hi);
    }
    let kind = if b == f64::INFINITY {
        DomainKind::HalfSpace { lambda: a }
    } else {
        DomainKind::Interval { a, b }
    };
    Ok(GaussianDomain::from_grid_1d(kind, xs[1..=n].to_vec(), w))
}

fn build_1d(a: f64, b: f64, k: usize, resolution: usize) -> Result<SpectralModel> {
    if resolution < NODES_PER_MODE * k {
        return Err(Error::config(format!(
            "resolution {resolution} cannot resolve {k} modes; need at least {}",
            NODES_PER_MODE * k
        )));
    }
    let lo = a.max(-TRUNCATION_RADIUS);
    let hi = b.min(TRUNCATION_RADIUS);
    if !(lo < hi) {
        return Err(Error::domain("domain support beyond truncation radius"));
    }
    let n = resolution;
    if k > n {
        return Err(Error::config("more modes requested than grid nodes"));
    }
    let xs = graded_nodes(lo, hi, n);
    // face densities and exact cell γ-masses
    let mids: Vec<f64> = (0..=n).map(|j| 0.5 * (xs[j] + xs[j + 1])).collect();
    let phim: Vec<f64> = mids.iter().map(|&m| gaussian_density(m)).collect();
    let gaps: Vec<f64> = (0..=n).map(|j| xs[j + 1] - xs[j]).collect();
    let mut w = vec![0.0; n];
    for i in 1..=n {
        let cell_lo = if i == 1 { xs[0] } else { mids[i - 1] };
        let cell_hi = if i == n { xs[n + 1] } else { mids[i] };
        w[i - 1] = phi_tail(cell_lo) - phi_tail(cell_hi);
    }
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n - 1];
    for i in 1..=n {
        diag[i - 1] = (phim[i - 1] / gaps[i - 1] + phim[i] / gaps[i]) / w[i - 1];
    }
    for i in 1..n {
        off[i - 1] = -phim[i] / gaps[i] / (w[i - 1] * w[i]).sqrt();
    }
    let tri = SymTridiag::new(diag, off);
    let (eigenvalues, vecs) = tri.lowest_eigenpairs(k);
    if eigenvalues[0] <= 0.0 {
        return Err(Error::numerical(format!(
            "discrete Dirichlet spectrum not positive: λ₁ = {}",
            eigenvalues[0]
        )));
    }
    let kind = if b == f64::INFINITY {
        DomainKind::HalfSpace { lambda: a }
    } else {
        DomainKind::Interval { a, b }
    };
    let interior: Vec<f64> = xs[1..=n].to_vec();
    let domain = GaussianDomain::from_grid_1d(kind, interior, w.clone());
    let weights = domain.quadrature().weights();
    let eigenfields: Vec<Vec<f64>> = vecs
        .into_iter()
        .map(|v| {
            let mut field: Vec<f64> = v
                .iter()
                .zip(weights)
                .map(|(vi, wi)| vi / wi.sqrt())
                .collect();
            fix_sign(&mut field);
            field
        })
        .collect();
    Ok(SpectralModel {
        domain,
        eigenvalues,
        eigenfields,
        basis: BasisKind::Numeric,
    })
}

/// Deterministic sign convention: the largest-magnitude component is positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// 5-point stencil application y = A x on the staircase grid (stiffness part).
fn apply_stiffness(geom: &Grid2dGeometry, x: &[f64], y: &mut [f64]) {
    let h = geom.h;
    let face = |c: f64| phi_tail(c - 0.5 * h) - phi_tail(c + 0.5 * h);
    for i in 0..geom.nx {
        for j in 0..geom.ny {
            let me = geom.site(i, j);
            if me < 0 {
                continue;
            }
            let (cx, cy) = geom.coords(i, j);
            let mx = face(cx);
            let my = face(cy);
            let mut acc = 0.0;
            // x-direction faces
            for (di, side) in [(-1i64, -0.5), (1i64, 0.5)] {
                let t = gaussian_density(cx + side * h) * my / h;
                acc += t * x[me as usize];
                let ii = i as i64 + di;
                if ii >= 0 && (ii as usize) < geom.nx {
                    let nb = geom.site(ii as usize, j);
                    if nb >= 0 {
                        acc -= t * x[nb as usize];
                    }
                }
            }
            // y-direction faces
            for (dj, side) in [(-1i64, -0.5), (1i64, 0.5)] {
                let t = gaussian_density(cy + side * h) * mx / h;
                acc += t * x[me as usize];
                let jj = j as i64 + dj;
                if jj >= 0 && (jj as usize) < geom.ny {
                    let nb = geom.site(i, jj as usize);
                    if nb >= 0 {
                        acc -= t * x[nb as usize];
                    }
                }
            }
            y[me as usize] = acc;
        }
    }
}

fn build_2d(
    domain: &Arc<GaussianDomain>,
    geom: &Grid2dGeometry,
    k: usize,
) -> Result<SpectralModel> {
    let rule = domain.quadrature();
    let n = rule.len();
    if k > n / 2 {
        return Err(Error::config(format!(
            "{k} modes on a {n}-node staircase grid is not resolvable"
        )));
    }
    let weights = rule.weights();
    // assemble the banded stiffness matrix (bandwidth ny in lexicographic order)
    let bw = geom.ny;
    let mut a = BandedSpd::zeros(n, bw);
    let h = geom.h;
    let face = |c: f64| phi_tail(c - 0.5 * h) - phi_tail(c + 0.5 * h);
    for i in 0..geom.nx {
        for j in 0..geom.ny {
            let me = geom.site(i, j);
            if me < 0 {
                continue;
            }
            let (cx, cy) = geom.coords(i, j);
            let (mx, my) = (face(cx), face(cy));
            let mut dii = 0.0;
            for (di, side) in [(-1i64, -0.5), (1i64, 0.5)] {
                let t = gaussian_density(cx + side * h) * my / h;
                dii += t;
                let ii = i as i64 + di;
                if ii >= 0 && (ii as usize) < geom.nx {
                    let nb = geom.site(ii as usize, j);
                    if nb >= 0 && nb < me {
                        a.set(me as usize, nb as usize, -t);
                    }
                }
            }
            for (dj, side) in [(-1i64, -0.5), (1i64, 0.5)] {
                let t = gaussian_density(cy + side * h) * mx / h;
                dii += t;
                let jj = j as i64 + dj;
                if jj >= 0 && (jj as usize) < geom.ny {
                    let nb = geom.site(i, jj as usize);
                    if nb >= 0 && nb < me {
                        a.set(me as usize, nb as usize, -t);
                    }
                }
            }
            a.set(me as usize, me as usize, dii);
        }
    }
    if !a.cholesky() {
        return Err(Error::numerical("staircase stiffness matrix is not positive definite"));
    }

    // subspace iteration on A⁻¹B with B-orthonormal Rayleigh-Ritz
    let m = (k + 8).min(n);
    let mut v: Vec<Vec<f64>> = (0..m)
        .map(|l| {
            (0..n)
                .map(|i| {
                    let t = ((i * 2654435761 + l * 40503) % 65536) as f64 / 65536.0;
                    t - 0.5
                })
                .collect()
        })
        .collect();
    b_orthonormalize(&mut v, weights);
    let mut theta = vec![0.0; m];
    let mut scratch = vec![0.0; n];
    for _iter in 0..120 {
        // X = A^{-1} B V
        let mut x: Vec<Vec<f64>> = v
            .iter()
            .map(|col| {
                let bv: Vec<f64> = col.iter().zip(weights).map(|(c, w)| c * w).collect();
                a.solve(&bv)
            })
            .collect();
        b_orthonormalize(&mut x, weights);
        // Rayleigh-Ritz on the projected stiffness
        let mut hmat = vec![vec![0.0; m]; m];
        for (q, xq) in x.iter().enumerate() {
            apply_stiffness(geom, xq, &mut scratch);
            for p in 0..=q {
                let dot: f64 = x[p].iter().zip(&scratch).map(|(a, b)| a * b).sum();
                hmat[p][q] = dot;
                hmat[q][p] = dot;
            }
        }
        let (evals, evecs) = jacobi_eigen(&hmat);
        let mut next: Vec<Vec<f64>> = vec![vec![0.0; n]; m];
        for (l, target) in next.iter_mut().enumerate() {
            for (q, xq) in x.iter().enumerate() {
                let c = evecs[l][q];
                if c != 0.0 {
                    for (t, xv) in target.iter_mut().zip(xq) {
                        *t += c * xv;
                    }
                }
            }
        }
        v = next;
        let mut done = true;
        for l in 0..k {
            let change = (evals[l] - theta[l]).abs();
            if change > 1e-10 * evals[l].abs().max(1.0) {
                done = false;
            }
        }
        theta = evals;
        if done {
            break;
        }
    }
    let eigenvalues: Vec<f64> = theta[..k].to_vec();
    if eigenvalues[0] <= 0.0 {
        return Err(Error::numerical("2D Dirichlet spectrum not positive"));
    }
    let eigenfields: Vec<Vec<f64>> = v[..k]
        .iter()
        .map(|col| {
            let mut f = col.clone();
            fix_sign(&mut f);
            f
        })
        .collect();
    Ok(SpectralModel {
        domain: Arc::clone(domain),
        eigenvalues,
        eigenfields,
        basis: BasisKind::Numeric,
    })
}

/// Modified Gram–Schmidt in the B = diag(w) inner product.
fn b_orthonormalize(v: &mut [Vec<f64>], w: &[f64]) {
    for l in 0..v.len() {
        for p in 0..l {
            let dot: f64 = v[l]
                .iter()
                .zip(&v[p])
                .zip(w)
                .map(|((a, b), w)| w * a * b)
                .sum();
            let (head, tail) = v.split_at_mut(l);
            for (x, y) in tail[0].iter_mut().zip(&head[p]) {
                *x -= dot * y;
            }
        }
        let norm: f64 = v[l]
            .iter()
            .zip(w)
            .map(|(a, w)| w * a * a)
            .sum::<f64>()
            .sqrt();
        if norm > 0.0 {
            for x in v[l].iter_mut() {
                *x /= norm;
            }
        }
    }
}

/// L^σ u = Σ λ_k^σ ⟨u, ψ_k⟩ ψ_k. σ = -s solves L^s u = f, σ = s applies the
/// fractional operator, σ = s/2 the half power.
pub fn fractional_apply(model: &SpectralModel, u: &GridField, sigma: f64) -> Result<SpectralField> {
    let coeffs = model.coefficients(u)?;
    let diagnostics = model.diagnostics_for(u, &coeffs);
    let scaled: Vec<f64> = coeffs
        .iter()
        .zip(model.eigenvalues())
        .map(|(c, l)| c * l.powf(sigma))
        .collect();
    let field = model.reconstruct(&scaled, format!("L^{}[{}]", sigma, u.label()));
    Ok(SpectralField { field, diagnostics })
}

/// ‖u‖_{H^s(Ω,γ)} = (Σ λ_k^s ⟨u, ψ_k⟩²)^{1/2}.
pub fn hs_norm(model: &SpectralModel, u: &GridField, s: f64) -> Result<(f64, SpectralDiagnostics)> {
    let coeffs = model.coefficients(u)?;
    let diagnostics = model.diagnostics_for(u, &coeffs);
    let value = coeffs
        .iter()
        .zip(model.eigenvalues())
        .map(|(c, l)| l.powf(s) * c * c)
        .sum::<f64>()
        .sqrt();
    Ok((value, diagnostics))
}

/// Dirichlet semigroup e^{-tL_Ω} f = Σ e^{-λ_k t} ⟨f, ψ_k⟩ ψ_k.
pub fn dirichlet_semigroup(model: &SpectralModel, f: &GridField, t: f64) -> Result<SpectralField> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("semigroup time must be positive (got {t})")));
    }
    let coeffs = model.coefficients(f)?;
    let diagnostics = model.diagnostics_for(f, &coeffs);
    let scaled: Vec<f64> = coeffs
        .iter()
        .zip(model.eigenvalues())
        .map(|(c, l)| c * (-l * t).exp())
        .collect();
    let field = model.reconstruct(&scaled, format!("e^-tL[{}]", f.label()));
    Ok(SpectralField { field, diagnostics })
}

// ---------------------------------------------------------------------------
// text serialization (versioned CSV blocks) for CLI caching
// ---------------------------------------------------------------------------

const FORMAT_TAG: &str = "gfou-spectral-v1";

impl SpectralModel {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(FORMAT_TAG);
        out.push('\n');
        match self.domain.kind() {
            DomainKind::HalfSpace { lambda } => {
                out.push_str(&format!("kind,halfspace,{:.17e}\n", lambda));
            }
            DomainKind::Interval { a, b } => {
                out.push_str(&format!("kind,interval,{:.17e},{:.17e}\n", a, b));
            }
            DomainKind::Grid2d(g) => {
                out.push_str(&format!(
                    "kind,grid2d,{:.17e},{:.17e},{:.17e},{},{}\n",
                    g.x0, g.y0, g.h, g.nx, g.ny
                ));
                out.push_str("mask,");
                let mask: String = g.index.iter().map(|&i| if i >= 0 { '1' } else { '0' }).collect();
                out.push_str(&mask);
                out.push('\n');
            }
        }
        out.push_str(&format!(
            "basis,{}\n",
            match self.basis {
                BasisKind::Numeric => "numeric",
                BasisKind::AnalyticOddHermite => "odd-hermite",
            }
        ));
        let rule = self.domain.quadrature();
        push_row(&mut out, "eigenvalues", &self.eigenvalues);
        push_row(&mut out, "nodes-x", rule.xs());
        if let Some(ys) = rule.ys() {
            push_row(&mut out, "nodes-y", ys);
        }
        push_row(&mut out, "weights", rule.weights());
        for (k, psi) in self.eigenfields.iter().enumerate() {
            push_row(&mut out, &format!("mode-{k}"), psi);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<SpectralModel> {
        let mut lines = text.lines();
        let tag = lines.next().ok_or_else(|| Error::config("empty model text"))?;
        if tag.trim() != FORMAT_TAG {
            return Err(Error::config(format!("unknown model format `{tag}`")));
        }
        let mut kind: Option<DomainKind> = None;
        let mut mask: Option<Vec<i64>> = None;
        let mut basis = BasisKind::Numeric;
        let mut eigenvalues: Vec<f64> = Vec::new();
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Option<Vec<f64>> = None;
        let mut weights: Vec<f64> = Vec::new();
        let mut modes: Vec<Vec<f64>> = Vec::new();
        for line in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (head, rest) = line.split_once(',').unwrap_or((line, ""));
            match head {
                "kind" => {
                    let parts: Vec<&str> = rest.split(',').collect();
                    kind = Some(match parts.first().copied() {
                        Some("halfspace") => DomainKind::HalfSpace {
                            lambda: parse_f64(parts.get(1))?,
                        },
                        Some("interval") => DomainKind::Interval {
                            a: parse_f64(parts.get(1))?,
                            b: parse_f64(parts.get(2))?,
                        },
                        Some("grid2d") => {
                            let x0 = parse_f64(parts.get(1))?;
                            let y0 = parse_f64(parts.get(2))?;
                            let h = parse_f64(parts.get(3))?;
                            let nx = parse_usize(parts.get(4))?;
                            let ny = parse_usize(parts.get(5))?;
                            DomainKind::Grid2d(Grid2dGeometry {
                                x0,
                                y0,
                                h,
                                nx,
                                ny,
                                index: Vec::new(),
                            })
                        }
                        other => {
                            return Err(Error::config(format!("unknown domain kind {other:?}")))
                        }
                    });
                }
                "mask" => {
                    let mut idx = Vec::with_capacity(rest.len());
                    let mut count = 0i64;
                    for c in rest.chars() {
                        if c == '1' {
                            idx.push(count);
                            count += 1;
                        } else {
                            idx.push(-1);
                        }
                    }
                    mask = Some(idx);
                }
                "basis" => {
                    basis = match rest {
                        "numeric" => BasisKind::Numeric,
                        "odd-hermite" => BasisKind::AnalyticOddHermite,
                        other => return Err(Error::config(format!("unknown basis `{other}`"))),
                    };
                }
                "eigenvalues" => eigenvalues = parse_row(rest)?,
                "nodes-x" => xs = parse_row(rest)?,
                "nodes-y" => ys = Some(parse_row(rest)?),
                "weights" => weights = parse_row(rest)?,
                _ if head.starts_with("mode-") => modes.push(parse_row(rest)?),
                other => return Err(Error::config(format!("unknown block `{other}`"))),
            }
        }
        let mut kind = kind.ok_or_else(|| Error::config("model text missing kind"))?;
        if eigenvalues.is_empty() || xs.is_empty() || weights.len() != xs.len() {
            return Err(Error::config("model text missing blocks"));
        }
        if modes.len() != eigenvalues.len() || modes.iter().any(|m| m.len() != xs.len()) {
            return Err(Error::config("model text has inconsistent mode rows"));
        }
        let domain = match (&mut kind, ys) {
            (DomainKind::Grid2d(g), Some(ys)) => {
                g.index = mask.ok_or_else(|| Error::config("grid2d model missing mask"))?;
                if g.index.len() != g.nx * g.ny {
                    return Err(Error::config("grid2d mask length mismatch"));
                }
                GaussianDomain::from_grid_2d(g.clone(), xs, ys, weights)
            }
            (DomainKind::Grid2d(_), None) => {
                return Err(Error::config("grid2d model missing nodes-y"))
            }
            (k, _) => GaussianDomain::from_grid_1d(k.clone(), xs, weights),
        };
        Ok(SpectralModel {
            domain,
            eigenvalues,
            eigenfields: modes,
            basis,
        })
    }
}

fn push_row(out: &mut String, name: &str, row: &[f64]) {
    out.push_str(name);
    for v in row {
        out.push(',');
        out.push_str(&format!("{:.17e}", v));
    }
    out.push('\n');
}

fn parse_row(rest: &str) -> Result<Vec<f64>> {
    rest.split(',')
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::config(format!("bad float `{s}`: {e}")))
        })
        .collect()
}

fn parse_f64(part: Option<&&str>) -> Result<f64> {
    part.ok_or_else(|| Error::config("missing numeric field"))?
        .trim()
        .parse::<f64>()
        .map_err(|e| Error::config(format!("bad float: {e}")))
}

fn parse_usize(part: Option<&&str>) -> Result<usize> {
    part.ok_or_else(|| Error::config("missing integer field"))?
        .trim()
        .parse::<usize>()
        .map_err(|e| Error::config(format!("bad integer: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::GaussianDomain;
    use crate::semigroup::apply_halfspace_semigroup;

    fn halfline_model(k: usize, resolution: usize) -> SpectralModel {
        let dom = GaussianDomain::half_line(0.0, 64).unwrap();
        build_spectral_model(&dom, k, resolution).unwrap()
    }

    #[test]
    fn halfline_spectrum_matches_odd_hermite() {
        let model = halfline_model(5, 2000);
        for (k, &lam) in model.eigenvalues().iter().enumerate() {
            let exact = (2 * k + 1) as f64;
            assert!(
                (lam - exact).abs() < 1e-3,
                "λ_{} = {lam}, expected {exact}",
                k + 1
            );
        }
        // ψ₁ ∝ x: compare against the normalized analytic mode
        let psi1 = model.mode_field(0);
        let xs = model.domain().nodes_1d().unwrap();
        let norm = halfline_mode_norm(0);
        for (i, &x) in xs.iter().enumerate() {
            if x < 4.0 {
                assert!(
                    (psi1.values()[i] - x / norm).abs() < 2e-3,
                    "ψ₁({x}) = {} vs {}",
                    psi1.values()[i],
                    x / norm
                );
            }
        }
    }

    #[test]
    fn orthonormality_and_rayleigh_residual() {
        let model = halfline_model(8, 900);
        let w = model.domain().quadrature().weights();
        for i in 0..model.k() {
            for j in 0..=i {
                let dot: f64 = model.mode_values(i)
                    .iter()
                    .zip(model.mode_values(j))
                    .zip(w)
                    .map(|((a, b), w)| w * a * b)
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (dot - expect).abs() < 1e-8,
                    "⟨ψ_{i}, ψ_{j}⟩ = {dot}"
                );
            }
        }
        assert!(model.eigenvalues()[0] > 0.0);
    }

    #[test]
    fn rayleigh_quotient_matches_eigenvalue() {
        // the discrete weak form Σ φ(m_j)(ψ_{j+1} - ψ_j)²/g_j reproduces λ_k
        let model = halfline_model(6, 1200);
        let xs = model.domain().nodes_1d().unwrap();
        let n = xs.len();
        for k in 0..model.k() {
            let psi = model.mode_values(k);
            let mut energy = 0.0;
            // boundary gaps to the Dirichlet walls at 0 and TRUNCATION_RADIUS
            let g0 = xs[0];
            energy += crate::gauss::gaussian_density(0.5 * xs[0]) * psi[0] * psi[0] / g0;
            for j in 0..n - 1 {
                let gap = xs[j + 1] - xs[j];
                let mid = 0.5 * (xs[j] + xs[j + 1]);
                let diff = psi[j + 1] - psi[j];
                energy += crate::gauss::gaussian_density(mid) * diff * diff / gap;
            }
            let g_end = TRUNCATION_RADIUS - xs[n - 1];
            energy += crate::gauss::gaussian_density(0.5 * (xs[n - 1] + TRUNCATION_RADIUS))
                * psi[n - 1]
                * psi[n - 1]
                / g_end;
            let lam = model.eigenvalues()[k];
            assert!(
                (energy - lam).abs() <= 1e-6 * lam.max(1.0),
                "mode {k}: Rayleigh quotient {energy} vs λ = {lam}"
            );
        }
    }

    #[test]
    fn domain_monotonicity_of_ground_eigenvalue() {
        let d1 = GaussianDomain::half_line(0.0, 64).unwrap();
        let d2 = GaussianDomain::half_line(0.5, 64).unwrap();
        let m1 = build_spectral_model(&d1, 1, 400).unwrap();
        let m2 = build_spectral_model(&d2, 1, 400).unwrap();
        assert!(m2.eigenvalues()[0] > m1.eigenvalues()[0]);
    }

    #[test]
    fn eigenvalue_refinement_contracts() {
        let dom = GaussianDomain::half_line(0.0, 64).unwrap();
        let coarse = build_spectral_model(&dom, 5, 500).unwrap();
        let mid = build_spectral_model(&dom, 5, 1000).unwrap();
        let fine = build_spectral_model(&dom, 5, 2000).unwrap();
        for k in 0..5 {
            let d1 = (coarse.eigenvalues()[k] - mid.eigenvalues()[k]).abs();
            let d2 = (mid.eigenvalues()[k] - fine.eigenvalues()[k]).abs();
            assert!(d2 < d1, "mode {k}: refinement not contracting ({d1} -> {d2})");
        }
    }

    #[test]
    fn fractional_apply_identity_and_inverse() {
        let model = halfline_model(10, 800);
        let u = model.reconstruct(&[0.5, -0.2, 0.1, 0.3, 0.0, 0.7, 0.0, 0.0, -0.4, 0.05], "u");
        // identities hold in L²(γ); raw sup values near the truncation
        // wall carry no γ-mass and amplify rounding
        let id = fractional_apply(&model, &u, 0.0).unwrap();
        assert!(id.field.l2_distance(&u).unwrap() < 1e-9);
        let s = 0.6;
        let fwd = fractional_apply(&model, &u, s).unwrap();
        let back = fractional_apply(&model, &fwd.field, -s).unwrap();
        assert!(back.field.l2_distance(&u).unwrap() < 1e-8);
        assert!(!back.diagnostics.truncation_warning);
    }

    #[test]
    fn psi1_fixed_by_solution_operator() {
        let model = halfline_model(3, 600);
        let psi1 = model.mode_field(0);
        let out = fractional_apply(&model, &psi1, -0.5).unwrap();
        // λ₁ = 1 so 1^{-s} = 1 (within discretization of λ₁)
        assert!(out.field.sup_distance(&psi1).unwrap() < 5e-3);
    }

    #[test]
    fn hs_norm_values() {
        let model = halfline_model(6, 1200);
        let psi1 = model.mode_field(0);
        let (n1, _) = hs_norm(&model, &psi1, 0.7).unwrap();
        assert!((n1 - 1.0).abs() < 1e-3);
        // s = 0 reduces to the L² norm
        let u = model.reconstruct(&[0.3, 0.4, -0.1, 0.0, 0.2, 0.0], "u");
        let (n0, _) = hs_norm(&model, &u, 0.0).unwrap();
        assert!((n0 - u.l2_norm()).abs() < 1e-10);
        // u = ψ₂, s = 1/2 → λ₂^{1/4} = 3^{1/4}
        let psi2 = model.mode_field(1);
        let (n2, _) = hs_norm(&model, &psi2, 0.5).unwrap();
        assert!((n2 - 3f64.powf(0.25)).abs() < 1e-3, "{n2}");
    }

    #[test]
    fn truncation_warning_raised() {
        let model = halfline_model(2, 600);
        // a field with substantial energy beyond the first two modes
        let u = GridField::from_fn(model.domain(), "u", |p| (p[0] * 3.0).sin());
        let out = fractional_apply(&model, &u, -0.5).unwrap();
        assert!(out.diagnostics.tail_fraction > 0.01);
        assert!(out.diagnostics.truncation_warning);
    }

    #[test]
    fn dirichlet_semigroup_eigen_decay_and_contraction() {
        let model = halfline_model(4, 800);
        let psi1 = model.mode_field(0);
        let out = dirichlet_semigroup(&model, &psi1, 1.0).unwrap();
        let expected = psi1.scaled((-model.eigenvalues()[0]).exp());
        assert!(out.field.sup_distance(&expected).unwrap() < 1e-10);
        let f = model.reconstruct(&[0.2, -0.5, 0.3, 0.1], "f");
        let t = 0.7;
        let out = dirichlet_semigroup(&model, &f, t).unwrap();
        let bound = (-model.eigenvalues()[0] * t).exp() * f.l2_norm();
        assert!(out.field.l2_norm() <= bound + 1e-12);
        assert!(dirichlet_semigroup(&model, &f, 0.0).is_err());
    }

    #[test]
    fn spectral_route_matches_mehler_reflection() {
        // e^{-tL_H} by eigen-expansion vs the odd-reflection Mehler
        // quadrature, over a family of smooth data vanishing at the wall
        let model = halfline_model(30, 1500);
        let mehler_dom = GaussianDomain::half_line(0.0, 96).unwrap();
        let t = 0.5;
        let family: [(&str, fn(f64) -> f64); 5] = [
            ("ye^-y", |y| y * (-y).exp()),
            ("y e^-y²/2", |y| y * (-0.5 * y * y).exp()),
            ("y² e^-y", |y| y * y * (-y).exp()),
            ("sin bump", |y| (y.min(3.0) * std::f64::consts::PI / 3.0).sin().max(0.0)),
            ("y/(1+y²)", |y| y / (1.0 + y * y)),
        ];
        for (name, f) in family {
            let f_model = GridField::from_fn(model.domain(), name, |p| f(p[0]));
            let spectral = dirichlet_semigroup(&model, &f_model, t).unwrap();
            let f_mehler = GridField::from_fn(&mehler_dom, name, |p| f(p[0]));
            let mehler = apply_halfspace_semigroup(&f_mehler, t).unwrap();
            // compare on the Mehler nodes by interpolating the spectral result
            let xs = model.domain().nodes_1d().unwrap();
            let mut sup = 0.0f64;
            for (i, &x) in mehler_dom.nodes_1d().unwrap().iter().enumerate() {
                if x > 8.0 {
                    continue; // beyond both supports the fields are negligible
                }
                let v = interp_linear(xs, spectral.field.values(), x);
                sup = sup.max((v - mehler.values()[i]).abs());
            }
            assert!(sup < 1e-4, "route disagreement {sup} for {name}");
        }
    }

    fn interp_linear(xs: &[f64], vs: &[f64], x: f64) -> f64 {
        match xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => vs[i],
            Err(0) => vs[0] * x / xs[0].max(1e-300),
            Err(i) if i >= xs.len() => *vs.last().unwrap(),
            Err(i) => {
                let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
                vs[i - 1] * (1.0 - t) + vs[i] * t
            }
        }
    }

    #[test]
    fn analytic_model_is_orthonormal_and_matches_numeric() {
        let model = analytic_halfline_model(12, 96).unwrap();
        let w = model.domain().quadrature().weights();
        for i in 0..model.k() {
            for j in 0..=i {
                let dot: f64 = model.mode_values(i)
                    .iter()
                    .zip(model.mode_values(j))
                    .zip(w)
                    .map(|((a, b), w)| w * a * b)
                    .sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10, "⟨ψ_{i}, ψ_{j}⟩ = {dot}");
            }
        }
        assert_eq!(model.eigenvalues()[3], 7.0);
        assert!(model.eval_mode(0, 0.7).is_some());
    }

    #[test]
    fn text_round_trip() {
        let model = halfline_model(3, 400);
        let text = model.to_text();
        let back = SpectralModel::from_text(&text).unwrap();
        assert_eq!(back.k(), model.k());
        for k in 0..model.k() {
            assert!((back.eigenvalues()[k] - model.eigenvalues()[k]).abs() < 1e-15);
        }
        let u = model.mode_field(1);
        let c = back.coefficients(&u).unwrap();
        assert!((c[1] - 1.0).abs() < 1e-9);
        assert!(SpectralModel::from_text("garbage").is_err());
    }

    #[test]
    fn resolution_guard() {
        let dom = GaussianDomain::half_line(0.0, 64).unwrap();
        assert!(build_spectral_model(&dom, 30, 100).is_err());
        let full = GaussianDomain::full_line(64);
        assert!(build_spectral_model(&full, 3, 300).is_err());
    }
}
