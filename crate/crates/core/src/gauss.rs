//! Scalar Gaussian-measure primitives.
//!
//! The Gaussian tail function
//!
//! ```text
//! Φ(λ) = (1/√(2π)) ∫_λ^∞ e^{-r²/2} dr
//! ```
//!
//! its inverse, the isoperimetric profile r ↦ φ(Φ⁻¹(r)), and the derived
//! fractional-power parameters (a, c_s). Everything downstream — half-space
//! construction, rearrangements, the comparison budget — leans on the tail
//! accuracy of Φ, so it is computed through `erfc` rather than `1 - cdf`.

use crate::error::{Error, Result};

/// √(2π), the normalization of the one-dimensional Gaussian density.
pub const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// One-dimensional standard Gaussian density φ(x) = e^{-x²/2}/√(2π).
#[inline]
pub fn gaussian_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Product density of the n-dimensional Gaussian measure at a point.
#[inline]
pub fn gaussian_density_nd(x: &[f64]) -> f64 {
    x.iter().map(|&c| gaussian_density(c)).product()
}

/// Gaussian tail Φ(λ) = γ({x₁ > λ}) = erfc(λ/√2)/2.
///
/// Total on the extended reals: Φ(-∞) = 1, Φ(+∞) = 0. Strictly decreasing.
#[inline]
pub fn phi_tail(lambda: f64) -> f64 {
    if lambda == f64::NEG_INFINITY {
        return 1.0;
    }
    if lambda == f64::INFINITY {
        return 0.0;
    }
    0.5 * libm::erfc(lambda / std::f64::consts::SQRT_2)
}

/// Largest |x| for which `phi_tail` is representable away from {0, 1};
/// beyond this the bisection bracket cannot improve.
const PHI_INV_BRACKET: f64 = 40.0;

/// Inverse of `phi_tail` on [0, 1].
///
/// Safeguarded Newton on Φ (derivative -φ) inside a maintained bisection
/// bracket. Endpoints map to the ±∞ sentinels.
pub fn phi_inverse(r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::domain(format!(
            "phi_inverse argument {r} outside [0, 1]"
        )));
    }
    if r == 0.0 {
        return Ok(f64::INFINITY);
    }
    if r == 1.0 {
        return Ok(f64::NEG_INFINITY);
    }

    let (mut lo, mut hi) = (-PHI_INV_BRACKET, PHI_INV_BRACKET); // Φ(lo) > r > Φ(hi)
    let mut x = 0.0;
    for _ in 0..200 {
        let g = phi_tail(x) - r;
        if g == 0.0 {
            return Ok(x);
        }
        if g > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo < 1e-16 * (1.0 + x.abs()) {
            break;
        }
        let dg = gaussian_density(x);
        let newton = x + g / dg;
        x = if dg > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Ok(x)
}

/// Gaussian isoperimetric profile.
///
/// The smallest Gaussian perimeter among sets of measure r is attained by a
/// half-space, with value (1/√(2π)) exp(-[Φ⁻¹(r)]²/2) = φ(Φ⁻¹(r)).
/// Extends continuously by 0 at r ∈ {0, 1}; symmetric about r = 1/2.
pub fn isoperimetric_profile(r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::domain(format!(
            "isoperimetric_profile argument {r} outside [0, 1]"
        )));
    }
    if r == 0.0 || r == 1.0 {
        return Ok(0.0);
    }
    Ok(gaussian_density(phi_inverse(r)?))
}

/// Parameters of the fractional power L^s.
///
/// `a = 1 - 2s` is the extension weight exponent and
/// `c_s = Γ(1-s)/(4^{s-1/2} Γ(s))` the Neumann-trace normalization, so that
/// -lim_{y→0⁺} y^a w_y = c_s L^s u for the canonical extension w.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalParams {
    pub s: f64,
    pub a: f64,
    pub c_s: f64,
}

impl FractionalParams {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::domain(format!("fractional order s = {s} not in (0, 1)")));
        }
        let c_s = libm::tgamma(1.0 - s) / (libm::exp2(2.0 * (s - 0.5)) * libm::tgamma(s));
        Ok(FractionalParams { s, a: 1.0 - 2.0 * s, c_s })
    }
}
