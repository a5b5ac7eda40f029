//! Numerical toolkit for the fractional Ornstein–Uhlenbeck Dirichlet problem
//!
//! ```text
//! (-Δ + x·∇)^s u = f   in Ω,      u = 0   on ∂Ω,      0 < s < 1,
//! ```
//!
//! posed on open sets Ω ⊂ ℝⁿ (n = 1, 2) with Gaussian measure γ(Ω) < 1.
//!
//! The crate provides, at desk scale:
//!
//! - Gaussian-measure primitives: tail function Φ, its inverse, the
//!   isoperimetric profile, and γ-weighted quadratures ([`gauss`], [`domain`]);
//! - the Ornstein–Uhlenbeck semigroup through the Mehler kernel, including
//!   the killed half-space semigroup by odd reflection ([`semigroup`]);
//! - Dirichlet eigen-decompositions of L = -Δ + x·∇ and the spectral
//!   calculus L^σ, fractional norms, and the Dirichlet semigroup ([`spectral`]);
//! - the degenerate-elliptic extension problem with weight y^{1-2s}: Bessel-K
//!   spectral series, semigroup quadrature, Neumann traces, and the energy
//!   identity ([`extension`]);
//! - Gaussian decreasing rearrangements, concentration comparison, the
//!   Hardy–Littlewood inequality, and first/second-order derivation-formula
//!   checks ([`rearrange`]);
//! - end-to-end concentration-comparison experiments against symmetrized
//!   half-space problems ([`comparison`]);
//! - Zygmund-space norms, regularity-ratio experiments, and the Mehler-based
//!   half-space Green's function with its three-piece split ([`regularity`]).
//!
//! All operations are pure functions of immutable inputs and safe to call
//! concurrently.

pub mod comparison;
pub mod domain;
pub mod error;
pub mod extension;
pub mod field;
pub mod gauss;
pub mod hermite;
pub mod rearrange;
pub mod regularity;
pub mod semigroup;
pub mod spectral;
pub mod tridiag;

mod banded;

pub use domain::{build_quadrature, DomainKind, GaussianDomain, QuadratureRule};
pub use error::{Error, Result};
pub use field::GridField;
pub use gauss::{gaussian_density, isoperimetric_profile, phi_inverse, phi_tail, FractionalParams};
pub use rearrange::RearrangedProfile;
pub use spectral::{build_spectral_model, SpectralModel};
