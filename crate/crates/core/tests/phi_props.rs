mod common;

use common::unit;
use orlicz_core::phi::{
    check_equivalence, conjugate_phi, eval_phi, left_inverse, validate_phi, AffineField,
    OrliczProfile,
};
use orlicz_core::{BoxDomain, Condition, PhiDescriptor, PhiFunction, SampleSpec, Verdict};
use proptest::prelude::*;

fn window() -> BoxDomain {
    BoxDomain::new(vec![-1.0, 0.0], vec![1.0, 1.0]).unwrap()
}

fn catalogue() -> Vec<PhiDescriptor> {
    let a = AffineField {
        offset: 1.5,
        gradient: vec![0.5, 0.25],
    };
    vec![
        PhiDescriptor::Power { p: 1.0 },
        PhiDescriptor::Power { p: 2.5 },
        PhiDescriptor::Orlicz {
            profile: OrliczProfile::PowerLog { p: 1.5 },
        },
        PhiDescriptor::Orlicz {
            profile: OrliczProfile::Exponential,
        },
        PhiDescriptor::VariableExponent {
            exponent: a.clone(),
        },
        PhiDescriptor::DoublePhase {
            p: 2.0,
            q: 3.0,
            weight: AffineField {
                offset: -0.2,
                gradient: vec![1.0, 0.0],
            },
        },
        PhiDescriptor::Ramp,
        PhiDescriptor::RadialGate {
            axis: 0,
            center: 0.0,
        },
        PhiDescriptor::Scaled {
            factor: 3.0,
            base: Box::new(PhiDescriptor::Power { p: 2.0 }),
        },
        PhiDescriptor::Conjugate {
            base: Box::new(PhiDescriptor::Power { p: 3.0 }),
            t_max: 1e4,
        },
    ]
}

#[test]
fn every_family_is_a_weak_phi_function() {
    for d in catalogue() {
        let phi = PhiFunction::new(d.clone(), window()).unwrap();
        let mut s = SampleSpec::for_phi(&phi);
        s.x_per_axis = 9;
        validate_phi(&phi, &s).unwrap_or_else(|e| panic!("{d:?}: {e}"));
    }
}

#[test]
fn descriptors_round_trip_through_json() {
    for d in catalogue() {
        let text = serde_json::to_string(&d).unwrap();
        let back: PhiDescriptor = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
    }
    let d: PhiDescriptor = serde_json::from_str(r#"{"family":"power","p":2}"#).unwrap();
    assert_eq!(d, PhiDescriptor::Power { p: 2.0 });
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(PhiFunction::power(0.5, unit(2)).is_err());
    let bad_exponent = PhiDescriptor::VariableExponent {
        exponent: AffineField {
            offset: 0.5,
            gradient: vec![0.0, 0.0],
        },
    };
    assert!(PhiFunction::new(bad_exponent, unit(2)).is_err());
    assert!(PhiFunction::new(
        PhiDescriptor::DoublePhase {
            p: 3.0,
            q: 2.0,
            weight: AffineField::constant(1.0)
        },
        unit(2)
    )
    .is_err());
}

#[test]
fn a2_is_reported_as_unsupported() {
    let phi = PhiFunction::power(2.0, unit(2)).unwrap();
    assert!(
        orlicz_core::phi::check_condition(&phi, Condition::A2, &SampleSpec::default()).is_err()
    );
}

#[test]
fn ramp_left_inverse_shifts_by_one() {
    let phi = PhiFunction::ramp(unit(2));
    for tau in [0.25, 1.0, 7.0] {
        let t = left_inverse(&phi, &[0.3, 0.3], tau, 1e-12).unwrap();
        assert!((t - (1.0 + tau)).abs() < 1e-9, "{tau}: {t}");
    }
}

#[test]
fn growth_conditions_of_powers() {
    let phi = PhiFunction::power(2.0, unit(2)).unwrap();
    let s = SampleSpec::default();
    let run = |c| {
        orlicz_core::phi::check_condition(&phi, c, &s)
            .unwrap()
            .verdict
    };
    assert_eq!(run(Condition::AInc { p: 2.0 }), Verdict::Pass);
    assert_eq!(run(Condition::ADec { q: 2.0 }), Verdict::Pass);
    assert_eq!(run(Condition::AInc { p: 3.0 }), Verdict::Fail);
    assert_eq!(run(Condition::A0), Verdict::Pass);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn power_inverse_is_the_root(p in 1.0f64..4.0, tau in 1e-3f64..1e3) {
        let phi = PhiFunction::power(p, unit(2)).unwrap();
        let t = left_inverse(&phi, &[0.5, 0.5], tau, 1e-12).unwrap();
        let root = tau.powf(1.0 / p);
        prop_assert!((t - root).abs() <= 1e-9 * root.max(1.0), "{} vs {}", t, root);
    }

    #[test]
    fn inverse_is_consistent(k in 0usize..6, x0 in -1.0f64..1.0, x1 in 0.0f64..1.0, tau in 1e-2f64..1e2) {
        let d = catalogue()[[0, 1, 2, 4, 5, 8][k]].clone();
        let phi = PhiFunction::new(d, window()).unwrap();
        let x = [x0, x1];
        let t = left_inverse(&phi, &x, tau, 1e-12).unwrap();
        // Continuous increasing integrands: φ(φ⁻¹(τ)) = τ.
        let back = eval_phi(&phi, &x, t).unwrap();
        prop_assert!((back - tau).abs() <= 1e-6 * tau.max(1.0), "{} vs {}", back, tau);
        prop_assert!(eval_phi(&phi, &x, t * (1.0 - 1e-6)).unwrap() < tau);
    }

    #[test]
    fn scaling_rescales_the_inverse(c in 0.1f64..10.0, tau in 1e-2f64..1e2) {
        let base = PhiDescriptor::Power { p: 2.0 };
        let phi = PhiFunction::new(base.clone(), unit(2)).unwrap();
        let scaled = PhiFunction::new(PhiDescriptor::Scaled { factor: c, base: Box::new(base) }, unit(2)).unwrap();
        let x = [0.2, 0.7];
        let a = left_inverse(&scaled, &x, tau, 1e-12).unwrap();
        let b = left_inverse(&phi, &x, tau / c, 1e-12).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * b.max(1.0));
    }

    #[test]
    fn young_inequality(k in 0usize..3, s in 0.0f64..20.0, t in 0.0f64..20.0) {
        let d = [
            PhiDescriptor::Power { p: 2.0 },
            PhiDescriptor::Orlicz { profile: OrliczProfile::PowerLog { p: 1.5 } },
            PhiDescriptor::Power { p: 1.5 },
        ][k].clone();
        let phi = PhiFunction::new(d, unit(2)).unwrap();
        let x = [0.5, 0.5];
        let conj = conjugate_phi(&phi, &x, s, 1e4).unwrap();
        let rhs = eval_phi(&phi, &x, t).unwrap() + conj;
        prop_assert!(s * t <= rhs * (1.0 + 1e-9) + 1e-9, "{} > {}", s * t, rhs);
    }

    #[test]
    fn equivalence_is_symmetric(c in 0.1f64..10.0, p in 1.0f64..3.0) {
        let (lo, hi) = (2f64.powf(-p), 2f64.powf(p));
        prop_assume!((c / lo - 1.0).abs() > 1e-2 && (c / hi - 1.0).abs() > 1e-2);
        let base = PhiDescriptor::Power { p };
        let phi = PhiFunction::new(base.clone(), unit(2)).unwrap();
        let psi = PhiFunction::new(PhiDescriptor::Scaled { factor: c, base: Box::new(base) }, unit(2)).unwrap();
        let s = SampleSpec { x_per_axis: 5, ..SampleSpec::default() };
        let l = 2.0;
        let ab = check_equivalence(&phi, &psi, l, &s).unwrap().verdict;
        let ba = check_equivalence(&psi, &phi, l, &s).unwrap().verdict;
        let expected = if (lo..=hi).contains(&c) { Verdict::Pass } else { Verdict::Fail };
        prop_assert_eq!(ab, expected);
        prop_assert_eq!(ab, ba);
    }
}
