//! The Ornstein–Uhlenbeck semigroup e^{-tL} on ℝⁿ through the Mehler kernel,
//! and the Dirichlet (killed) semigroup on the half-space {x₁ > 0} by odd
//! reflection.
//!
//! ```text
//! M_t(x, y) = (1 - e^{-2t})^{-n/2}
//!             exp(-[e^{-2t}|x|² - 2e^{-t}⟨x,y⟩ + e^{-2t}|y|²] / [2(1 - e^{-2t})])
//! ```
//!
//! with ∫ M_t(x, ·) dγ = 1 for every x and t > 0. The half-space semigroup is
//! the restriction of e^{-tL} applied to the odd extension of the datum; in
//! one dimension this is the explicit kernel difference M_t(x, y) - M_t(x, -y).

use std::sync::Arc;

use crate::domain::GaussianDomain;
use crate::error::{Error, Result};
use crate::field::GridField;

/// Smallest semigroup time accepted by the field-level appliers. Below this
/// the kernel is too close to singular for the node-level quadrature; all
/// consumers integrate in t with substitutions that avoid this end.
pub const MIN_SEMIGROUP_TIME: f64 = 1e-3;

/// Mehler kernel M_t(x, y) for points in ℝ¹ or ℝ². The quadratic form in the
/// exponent is evaluated directly. Symmetric in (x, y); positive; singular as
/// t → 0⁺.
pub fn mehler_kernel(x: &[f64], y: &[f64], t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!(
            "Mehler kernel needs t > 0 (got {t}); the kernel is singular at t = 0"
        )));
    }
    if x.len() != y.len() || x.is_empty() || x.len() > 2 {
        return Err(Error::domain("Mehler kernel points must share dimension 1 or 2"));
    }
    let e = (-t).exp();
    let e2 = e * e;
    // 1 - e^{-2t} via expm1 keeps small-t evaluations finite.
    let one_minus = -libm::expm1(-2.0 * t);
    let (mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        xx += a * a;
        yy += b * b;
        xy += a * b;
    }
    let quad = e2 * xx - 2.0 * e * xy + e2 * yy;
    let prefactor = match x.len() {
        1 => 1.0 / one_minus.sqrt(),
        _ => 1.0 / one_minus,
    };
    Ok(prefactor * (-quad / (2.0 * one_minus)).exp())
}

/// Apply e^{-tL} to a field on the full space by node-wise quadrature of
/// ∫ M_t(x, y) g(y) dγ(y) against the field's own rule.
pub fn apply_semigroup(g: &GridField, t: f64) -> Result<GridField> {
    let domain = g.domain();
    if !domain.is_full_space() {
        return Err(Error::config(
            "apply_semigroup needs a full-space field; use apply_halfspace_semigroup on H",
        ));
    }
    check_time(t)?;
    let rule = domain.quadrature();
    let dim = domain.dim() as usize;
    let n = rule.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let xi = rule.node(i);
        let mut acc = 0.0;
        for j in 0..n {
            let yj = rule.node(j);
            acc += rule.weights()[j]
                * mehler_kernel(&xi[..dim], &yj[..dim], t)?
                * g.values()[j];
        }
        out[i] = acc;
    }
    GridField::from_values(Arc::clone(domain), g.label().to_string(), out)
}

/// Apply the killed semigroup e^{-tL_H} on H = {x₁ > 0} by the reflection
/// kernel M_t(x, y) - M_t(x, ỹ), where ỹ flips the first coordinate. Equals
/// the restriction to H of e^{-tL} applied to the odd extension of `f`, and
/// vanishes at x₁ = 0⁺.
pub fn apply_halfspace_semigroup(f: &GridField, t: f64) -> Result<GridField> {
    let domain = f.domain();
    if !domain.is_half_space_at_zero() {
        return Err(Error::config(
            "apply_halfspace_semigroup needs a field on the half-space {x1 > 0}",
        ));
    }
    check_time(t)?;
    let rule = domain.quadrature();
    let dim = domain.dim() as usize;
    let n = rule.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let xi = rule.node(i);
        let mut acc = 0.0;
        for j in 0..n {
            let yj = rule.node(j);
            let mut yref = yj;
            yref[0] = -yref[0];
            let k = mehler_kernel(&xi[..dim], &yj[..dim], t)?
                - mehler_kernel(&xi[..dim], &yref[..dim], t)?;
            acc += rule.weights()[j] * k * f.values()[j];
        }
        out[i] = acc;
    }
    GridField::from_values(Arc::clone(domain), f.label().to_string(), out)
}

/// Odd extension of a half-space field to the full space: f̃(x) = f(x) for
/// x₁ > 0 and -f(-x₁, x') otherwise. The returned field lives on the
/// mirrored node set, so ‖f̃‖_p^p = 2‖f‖_p^p holds exactly at the discrete
/// level and restriction back to H is lossless.
pub fn odd_extension(f: &GridField) -> Result<GridField> {
    let domain = f.domain();
    if !domain.is_half_space_at_zero() || domain.dim() != 1 {
        return Err(Error::config("odd_extension expects a 1D field on {x > 0}"));
    }
    let rule = domain.quadrature();
    let n = rule.len();
    let mut xs = Vec::with_capacity(2 * n);
    let mut ws = Vec::with_capacity(2 * n);
    let mut values = Vec::with_capacity(2 * n);
    for j in (0..n).rev() {
        xs.push(-rule.xs()[j]);
        ws.push(rule.weights()[j]);
        values.push(-f.values()[j]);
    }
    xs.extend_from_slice(rule.xs());
    ws.extend_from_slice(rule.weights());
    values.extend_from_slice(f.values());
    let full = GaussianDomain::from_mirrored_nodes(xs, ws);
    GridField::from_values(full, format!("odd[{}]", f.label()), values)
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("semigroup time must be positive (got {t})")));
    }
    if t < MIN_SEMIGROUP_TIME {
        return Err(Error::domain(format!(
            "semigroup time {t} below supported threshold {MIN_SEMIGROUP_TIME}"
        )));
    }
    Ok(())
}
