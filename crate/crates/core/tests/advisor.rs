use mplsqr::advisor::{
    advise, advise_from_diagnostics, recommend, resolution_limit, u_upper_bound, ModelParams,
};
use mplsqr::problems::{picard_diagnostics, DecayType, ProblemInstance, ProblemKind};
use mplsqr::Precision;
use proptest::prelude::*;

fn decay() -> impl Strategy<Value = (DecayType, f64)> {
    prop_oneof![
        (1.01f64..4.0).prop_map(|r| (DecayType::Severe, r)),
        (1.01f64..4.0).prop_map(|a| (DecayType::Moderate, a)),
        (0.51f64..1.0).prop_map(|a| (DecayType::Mild, a)),
    ]
}

#[test]
fn closed_forms() {
    // (1e-3 / sqrt(1000))^(2/3), evaluated by hand as 10^(-4.5·2/3) = 10^-3.
    assert!((resolution_limit(1e-3, 1000, 2.0) / 1e-3 - 1.0).abs() < 1e-12);
    assert!((resolution_limit(1e-3, 1_000_000, 1.0) / 1e-3 - 1.0).abs() < 1e-12);
    // Large beta: exponent tends to one.
    let far = resolution_limit(1e-3, 100, 1e9);
    assert!((far / (1e-3 / 10.0) - 1.0).abs() < 1e-6);

    let b = u_upper_bound(1e-3, 1000, 1.0, DecayType::Severe, 2.0, 10).unwrap();
    // 10^(-4.5·1.5) = 10^-6.75.
    assert!((b.u_bound / 10f64.powf(-6.75) - 1.0).abs() < 1e-12);
    assert!((b.u_bound - 1.778e-7).abs() < 1e-10);
    let half = u_upper_bound(1e-3, 1000, 1.0, DecayType::Severe, 1.5, 10).unwrap();
    assert_eq!(half.u_bound, 0.5 * b.u_bound);
    let m = u_upper_bound(1e-3, 1000, 1.0, DecayType::Moderate, 1.0, 100).unwrap();
    assert!((m.varrho - 0.01).abs() < 1e-14);
    assert!(u_upper_bound(1e-3, 1000, 1.0, DecayType::Severe, 1.0, 10).is_err());
}

#[test]
fn recommendations() {
    assert_eq!(recommend(1.78e-7, 1.0).spec, Precision::Native32);
    let r = recommend(1.78e-7, 10.0);
    assert_eq!(r.spec, Precision::Native64);
    assert!(!r.marginal);
    assert_eq!(recommend(1e-2, 1e4).spec, Precision::Native32);
    assert!(recommend(1e-18, 10.0).marginal);
}

#[test]
fn gravity_tiny_noise_rules_out_single() {
    let inst = ProblemInstance::build(ProblemKind::Gravity, 2000, None, 1e-7, 1).unwrap();
    let d = picard_diagnostics(&inst).unwrap();
    let r = advise_from_diagnostics(1e-7, inst.m(), &d, 1.0).unwrap();
    assert!(r.u_bound < Precision::Native32.unit(), "{}", r.u_bound);
    assert_eq!(r.recommended, Precision::Native64);
}

/// The fitted shaw model gives beta near 0.4, which puts the bound below the
/// single precision unit even though single precision reaches the double
/// optimum on this problem.
#[test]
#[ignore = "fitted beta for shaw is too small for the bound to admit binary32"]
fn shaw_admits_single() {
    let inst = ProblemInstance::build(ProblemKind::Shaw, 1000, None, 1e-3, 1).unwrap();
    let d = picard_diagnostics(&inst).unwrap();
    let r = advise_from_diagnostics(1e-3, inst.m(), &d, 1.0).unwrap();
    assert!(r.u_bound > Precision::Native32.unit(), "{}", r.u_bound);
}

#[test]
fn report_flags_marginal_and_unreliable_fits() {
    let model = ModelParams {
        beta: 0.5,
        rho0: 1.0,
        decay_type: DecayType::Severe,
        decay_param: 1.01,
        k_star: 2,
        reliable: false,
    };
    let r = advise(1e-12, 1_000_000, &model, 10.0).unwrap();
    assert_eq!(r.recommended, Precision::Native64);
    assert!(r.warnings.len() >= 2, "{:?}", r.warnings);
    let text = r.to_string();
    assert!(text.contains("f64"));
    assert!(advise(1e-3, 100, &model, 0.5).is_err());
}

proptest! {
    #[test]
    fn bound_grows_with_noise_and_gap(
        eps in 1e-10f64..0.5,
        m in 10usize..1_000_000,
        beta in 0.05f64..5.0,
        (kind, p) in decay(),
        k_star in 1usize..200,
        f in 1.01f64..10.0,
    ) {
        let b = |eps: f64, m: usize| u_upper_bound(eps, m, beta, kind, p, k_star).unwrap().u_bound;
        let base = b(eps, m);
        prop_assume!(base > 0.0);
        prop_assert!(b((eps * f).min(0.99), m) > base || eps * f >= 0.99);
        prop_assert!(b(eps, m * 2) < base);
        let varrho = u_upper_bound(eps, m, beta, kind, p, k_star).unwrap().varrho;
        let q = match kind {
            DecayType::Severe => p + 0.01 * (p - 1.0).min(1.0),
            _ => p * 1.01,
        };
        let v2 = u_upper_bound(eps, m, beta, kind, q, k_star).unwrap();
        if varrho < 1.0 {
            prop_assert!(v2.varrho > varrho && v2.u_bound > base);
        }
    }

    #[test]
    fn larger_bound_never_costs_more(a in 1e-20f64..1.0, b in 1e-20f64..1.0, safety in 1.0f64..1e3) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let bits = |u: f64| recommend(u, safety).spec.significand_bits();
        prop_assert!(bits(hi) <= bits(lo));
    }
}
