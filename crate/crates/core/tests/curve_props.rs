mod common;

use orlicz_core::curve::{
    curve_integral, curves_meeting_set, family_integrals, parallel_family, segment_family,
};
use orlicz_core::generate::FieldSpec;
use orlicz_core::io::{read_curves, write_curves};
use orlicz_core::{BoxDomain, BoxGrid, Curve, FieldKind, ScalarField};
use proptest::prelude::*;

fn smooth(m: usize) -> ScalarField {
    ScalarField::from_fn(BoxGrid::unit_square(m), FieldKind::Nonneg, |x| {
        1.0 + x[0] * x[1] + (x[0] - x[1]).sin().abs()
    })
    .unwrap()
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..1.0, 2)
}

fn polyline() -> impl Strategy<Value = Curve> {
    proptest::collection::vec(point(), 2..6).prop_filter_map("degenerate", |v| Curve::new(v).ok())
}

#[test]
fn constant_field_integrates_to_length() {
    let u = ScalarField::constant(BoxGrid::unit_square(9), 2.5).unwrap();
    let c = Curve::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
    assert!((curve_integral(&u, &c, 0.01).unwrap() - 5.0).abs() < 1e-12);
}

#[test]
fn signed_fields_are_rejected() {
    let u = FieldSpec::Affine {
        offset: -1.0,
        gradient: vec![1.0, 0.0],
    }
    .sample(&BoxGrid::unit_square(5))
    .unwrap();
    let c = Curve::segment(vec![0.0, 0.5], vec![1.0, 0.5]).unwrap();
    assert!(curve_integral(&u, &c, 0.1).is_err());
}

#[test]
fn curves_leaving_the_grid_are_rejected() {
    let u = ScalarField::constant(BoxGrid::unit_square(5), 1.0).unwrap();
    let c = Curve::segment(vec![0.5, 0.5], vec![1.5, 0.5]).unwrap();
    assert!(curve_integral(&u, &c, 0.1).is_err());
}

#[test]
fn generated_families_stay_in_the_box() {
    let d = BoxDomain::new(vec![-1.0, 0.0], vec![1.0, 2.0]).unwrap();
    for fam in [
        segment_family(0, 7, &d).unwrap(),
        segment_family(1, 1, &d).unwrap(),
        parallel_family([1.0, 2.0], 12, &d).unwrap(),
        parallel_family([-1.0, 1.0], 5, &d).unwrap(),
    ] {
        assert!(fam.within(&d), "{}", fam.tag);
        assert!(!fam.is_empty());
    }
    let cube = BoxDomain::unit(3);
    let fam = segment_family(2, 3, &cube).unwrap();
    assert_eq!(fam.len(), 9);
}

#[test]
fn meeting_set_selects_crossing_curves() {
    let g = BoxGrid::unit_square(17);
    let fam = segment_family(1, 17, g.domain()).unwrap();
    let mask = FieldSpec::HyperplaneMask {
        axis: 0,
        offset: 0.5,
    }
    .sample(&g)
    .unwrap();
    let hit = curves_meeting_set(&fam, &mask, 0.01).unwrap();
    assert_eq!(hit.len(), 1);
    assert_eq!(hit.curves[0].vertices()[0][0], 0.5);
    let across = segment_family(0, 5, g.domain()).unwrap();
    assert_eq!(curves_meeting_set(&across, &mask, 0.01).unwrap().len(), 5);
}

#[test]
fn curve_integrals_converge_at_second_order() {
    let (a, b): (Vec<f64>, Vec<f64>) = (vec![0.1, 0.2], vec![0.9, 0.75]);
    let len = ((0.8f64).powi(2) + (0.55f64).powi(2)).sqrt();
    let slope = (0.8 + 0.55) / len;
    let exact = (b[0] + b[1]).exp() - (a[0] + a[1]).exp();
    let exact = exact / slope;
    let gamma = Curve::segment(a, b).unwrap();
    let errs: Vec<f64> = [9, 17, 33, 65]
        .iter()
        .map(|&m| {
            let g = BoxGrid::unit_square(m);
            let u = ScalarField::from_fn(g.clone(), FieldKind::Nonneg, |x| (x[0] + x[1]).exp())
                .unwrap();
            (curve_integral(&u, &gamma, 0.5 * g.min_spacing()).unwrap() - exact).abs()
        })
        .collect();
    for o in common::orders(&errs) {
        assert!(o > 1.8, "{errs:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn length_is_additive(c in polyline(), frac in 0.05f64..0.95) {
        let l = c.length();
        let s = frac * l;
        let a = c.restrict(0.0, s).unwrap();
        let b = c.restrict(s, l).unwrap();
        prop_assert!((a.length() + b.length() - l).abs() <= 1e-12 * l.max(1.0));
    }

    #[test]
    fn integral_is_invariant_under_reversal(c in polyline()) {
        let u = smooth(17);
        let f = curve_integral(&u, &c, 0.01).unwrap();
        let r = curve_integral(&u, &c.reversed(), 0.01).unwrap();
        prop_assert!((f - r).abs() <= 1e-9 * f.max(1.0));
    }

    #[test]
    fn integral_is_invariant_under_collinear_subdivision(p in point(), q in point(), t in 0.1f64..0.9) {
        let d: f64 = p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
        prop_assume!(d > 1e-4);
        let m: Vec<f64> = p.iter().zip(&q).map(|(a, b)| a + t * (b - a)).collect();
        let u = smooth(17);
        let straight = curve_integral(&u, &Curve::segment(p.clone(), q.clone()).unwrap(), 0.01).unwrap();
        let split = curve_integral(&u, &Curve::new(vec![p, m, q]).unwrap(), 0.01).unwrap();
        prop_assert!((straight - split).abs() <= 1e-9 * straight.max(1.0));
    }

    #[test]
    fn restriction_does_not_increase_the_integral(c in polyline(), a in 0.0f64..0.5, b in 0.5f64..1.0) {
        let u = smooth(17);
        let l = c.length();
        let full = curve_integral(&u, &c, 1e-3).unwrap();
        let part = curve_integral(&u, &c.restrict(a * l, b * l).unwrap(), 1e-3).unwrap();
        prop_assert!(part <= full + 1e-6);
    }

    #[test]
    fn refinement_changes_the_integral_little(c in polyline()) {
        let u = smooth(33);
        let coarse = curve_integral(&u, &c, 0.02).unwrap();
        let fine = curve_integral(&u, &c, 0.01).unwrap();
        prop_assert!((coarse - fine).abs() <= 1e-3 * c.length().max(1.0));
    }

    #[test]
    fn curve_files_round_trip(cs in proptest::collection::vec(polyline(), 1..4)) {
        let back = read_curves(&write_curves(&cs), "t").unwrap();
        prop_assert_eq!(back.curves, cs);
    }

    #[test]
    fn family_integrals_match_single_calls(n in 1usize..20) {
        let u = smooth(9);
        let fam = parallel_family([1.0, 0.5], n, u.grid().domain()).unwrap();
        let all = family_integrals(&u, &fam, 0.05).unwrap();
        for (c, v) in fam.curves.iter().zip(&all) {
            prop_assert_eq!(*v, curve_integral(&u, c, 0.05).unwrap());
        }
    }
}
