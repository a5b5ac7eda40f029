//! Property-based invariants (proptest) spanning the quadrature,
//! rearrangement, and spectral layers.

use std::sync::{Arc, OnceLock};

use gfou_core::domain::GaussianDomain;
use gfou_core::gauss::{gaussian_density, isoperimetric_profile, phi_inverse, phi_tail};
use gfou_core::rearrange::{
    concentration_leq, decreasing_rearrangement, distribution_function,
    gaussian_rearrangement_field, hardy_littlewood_check, Concentration,
};
use gfou_core::regularity::{zygmund_norm, ZygmundVariant};
use gfou_core::semigroup::mehler_kernel;
use gfou_core::spectral::{build_spectral_model, hs_norm, SpectralModel};
use gfou_core::GridField;

use proptest::prelude::*;

fn shared_domain() -> &'static Arc<GaussianDomain> {
    static DOM: OnceLock<Arc<GaussianDomain>> = OnceLock::new();
    DOM.get_or_init(|| GaussianDomain::interval(-1.5, 2.5, 32).unwrap())
}

fn shared_model(resolution: usize) -> Arc<SpectralModel> {
    static M1: OnceLock<Arc<SpectralModel>> = OnceLock::new();
    static M2: OnceLock<Arc<SpectralModel>> = OnceLock::new();
    let cell = if resolution == 600 { &M1 } else { &M2 };
    Arc::clone(cell.get_or_init(|| {
        let dom = GaussianDomain::half_line(1.0, 16).unwrap();
        Arc::new(build_spectral_model(&dom, 12, resolution).unwrap())
    }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// phi_tail ∘ phi_inverse = identity on [1e-10, 1 - 1e-10].
    #[test]
    fn phi_round_trip(r in 1e-10f64..=0.9999999999) {
        let x = phi_inverse(r).unwrap();
        prop_assert!((phi_tail(x) - r).abs() < 1e-10);
    }

    /// Gaussian isoperimetry on intervals: φ(a) + φ(b) ≥ I(γ((a,b))).
    #[test]
    fn interval_isoperimetric(a in -4.0f64..3.0, len in 0.01f64..5.0) {
        let b = a + len;
        let measure = phi_tail(a) - phi_tail(b);
        let perimeter = gaussian_density(a) + gaussian_density(b);
        prop_assert!(perimeter >= isoperimetric_profile(measure).unwrap() - 1e-12);
    }

    /// Mehler kernel symmetry and positivity at moderate arguments.
    #[test]
    fn mehler_symmetric_positive(
        x in -4.0f64..4.0,
        y in -4.0f64..4.0,
        t in 0.01f64..5.0,
    ) {
        let m = mehler_kernel(&[x], &[y], t).unwrap();
        let m2 = mehler_kernel(&[y], &[x], t).unwrap();
        prop_assert!(m > 0.0);
        prop_assert!((m - m2).abs() <= 1e-12 * m.max(1.0));
    }

    /// L²(γ) norm computed directly and through the sorted rearrangement
    /// agree (equimeasurability of the discrete profile is exact).
    #[test]
    fn l2_norm_two_ways(seed in 0u64..1000) {
        let dom = shared_domain();
        let u = GridField::from_fn(dom, "u", |p| {
            ((seed as f64) * 0.37 + 2.1 * p[0]).sin() + 0.3 * p[0]
        });
        let direct = u.l2_norm();
        let via_profile = decreasing_rearrangement(&u).lp_norm(2.0);
        prop_assert!((direct - via_profile).abs() < 1e-8 * direct.max(1e-12));
    }

    /// Pointwise domination |u| ≤ |v| implies u^⊛ ≤ v^⊛ pointwise and the
    /// concentration order.
    #[test]
    fn rearrangement_monotone(values in proptest::collection::vec(0.0f64..2.0, 50)) {
        let dom = shared_domain();
        let n = dom.quadrature().len();
        let u_vals: Vec<f64> = (0..n).map(|i| values[i % values.len()]).collect();
        let v_vals: Vec<f64> = u_vals.iter().enumerate()
            .map(|(i, v)| v + 0.25 * ((i % 7) as f64) / 7.0)
            .collect();
        let u = GridField::from_values(Arc::clone(dom), "u", u_vals).unwrap();
        let v = GridField::from_values(Arc::clone(dom), "v", v_vals).unwrap();
        let pu = decreasing_rearrangement(&u);
        let pv = decreasing_rearrangement(&v);
        for (i, &r) in pu.breakpoints().iter().enumerate() {
            prop_assert!(pu.values()[i] <= pv.value_at(r - 1e-15) + 1e-12);
        }
        prop_assert!(concentration_leq(&pu, &pv, 1e-8).unwrap() == Concentration::Holds);
    }

    /// Hardy-Littlewood on random node data.
    #[test]
    fn hardy_littlewood(data in proptest::collection::vec(-2.0f64..2.0, 64)) {
        let dom = shared_domain();
        let n = dom.quadrature().len();
        let u = GridField::from_values(
            Arc::clone(dom), "u",
            (0..n).map(|i| data[i % 32]).collect(),
        ).unwrap();
        let v = GridField::from_values(
            Arc::clone(dom), "v",
            (0..n).map(|i| data[32 + (i % 32)]).collect(),
        ).unwrap();
        prop_assert!(hardy_littlewood_check(&u, &v).unwrap() == Concentration::Holds);
    }

    /// Cumulative of a profile is concave: slopes (the values) nonincreasing.
    #[test]
    fn profile_cumulative_concave(seed in 0u64..500) {
        let dom = shared_domain();
        let u = GridField::from_fn(dom, "u", |p| {
            (p[0] + seed as f64).cos() * (0.5 + 0.3 * p[0].abs())
        });
        let prof = decreasing_rearrangement(&u);
        for w in prof.values().windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-15);
        }
        for w in prof.cumulative().windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-15);
        }
    }
}

#[test]
fn equimeasurability_of_rearranged_field() {
    // distribution functions of u and u^★ agree within one grid atom
    let dom = GaussianDomain::interval(0.0, 3.0, 64).unwrap();
    let u = GridField::from_fn(&dom, "u", |p| (3.0 - p[0]) * p[0].max(0.0));
    let (star, star_dom) = gaussian_rearrangement_field(&u, 64).unwrap();
    let atom_u = u.weights().iter().cloned().fold(0.0f64, f64::max);
    let atom_s = star.weights().iter().cloned().fold(0.0f64, f64::max);
    let atom = atom_u.max(atom_s);
    let _ = &star_dom;
    let sup = u.sup_norm();
    for k in 0..50 {
        let t = sup * k as f64 / 50.0;
        let d1 = distribution_function(&u, t);
        let d2 = distribution_function(&star, t);
        assert!(
            (d1 - d2).abs() <= 2.0 * atom + 1e-12,
            "distributions disagree at t = {t}: {d1} vs {d2}"
        );
    }
}

#[test]
fn hs_norm_zero_order_is_l2_and_embedding_constant_stable() {
    // s = 0 reduces to Parseval; H^s ↪ L²(log L)^{s/2} with a stable
    // empirical constant across a datum family and a grid refinement
    let s = 0.6;
    let coarse = shared_model(600);
    let fine = shared_model(1200);
    let family: Vec<Vec<f64>> = (0..30)
        .map(|i| {
            (0..12)
                .map(|k| ((i * 13 + k * 7) % 11) as f64 / 11.0 - 0.4)
                .collect()
        })
        .collect();
    let mut constants = Vec::new();
    for model in [&coarse, &fine] {
        let mut c_max = 0.0f64;
        for coeffs in &family {
            let u = model.reconstruct(coeffs, "u");
            let (hs, _) = hs_norm(model, &u, s).unwrap();
            let (l2, _) = hs_norm(model, &u, 0.0).unwrap();
            assert!((l2 - u.l2_norm()).abs() < 1e-9 * l2.max(1e-12));
            let prof = decreasing_rearrangement(&u);
            let z = zygmund_norm(&prof, 2.0, s / 2.0, ZygmundVariant::Quasi).unwrap();
            c_max = c_max.max(z.value / hs);
        }
        constants.push(c_max);
    }
    let drift = (constants[0] - constants[1]).abs() / constants[1];
    assert!(
        drift < 0.3,
        "embedding constant unstable under refinement: {constants:?}"
    );
}

#[test]
fn zygmund_maximal_dominates_quasi_on_random_profiles() {
    let dom = GaussianDomain::interval(-0.5, 2.0, 48).unwrap();
    for seed in 0..10 {
        let u = GridField::from_fn(&dom, "u", |p| {
            1.0 + (p[0] * (1.0 + seed as f64 * 0.3)).sin().abs()
        });
        let prof = decreasing_rearrangement(&u);
        for &(p, a) in &[(1.0, 0.0), (2.0, 0.5), (3.0, 1.0)] {
            let q = zygmund_norm(&prof, p, a, ZygmundVariant::Quasi).unwrap();
            let m = zygmund_norm(&prof, p, a, ZygmundVariant::Maximal).unwrap();
            assert!(m.value >= q.value - 1e-12);
        }
    }
}
