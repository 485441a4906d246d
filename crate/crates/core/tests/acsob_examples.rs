mod common;

use common::unit;
use orlicz_core::acsob::{
    acc_check, acl_check, classify_jump, fuglede_subsequence, gradient, liminf_representative,
    slices, sobolev_report, AccOptions, AccVerdict, FugledeOptions, JumpOptions, SliceVerdict,
};
use orlicz_core::curve::segment_family;
use orlicz_core::generate::FieldSpec;
use orlicz_core::{BoxGrid, FieldKind, NormOptions, PhiFunction, ScalarField};
use proptest::prelude::*;

#[test]
fn smooth_fields_are_acl() {
    let g = BoxGrid::unit_square(17);
    let spec = FieldSpec::Wave {
        amplitude: 1.0,
        frequency: 2.0,
        phase: 0.1,
        offset: 0.0,
    };
    let r = acl_check(
        &spec.sample(&g).unwrap(),
        &spec.sample(&g.refined()).unwrap(),
        &JumpOptions::default(),
    )
    .unwrap();
    assert!(r.is_acl_at_scale());
    assert!(r.axes.iter().all(|a| a.nac == 0));
}

#[test]
fn jumps_are_flagged_across_the_discontinuity() {
    let g = BoxGrid::unit_square(17);
    let spec = FieldSpec::Step {
        axis: 1,
        center: 0.5,
        below: 0.0,
        at: 0.5,
        above: 1.0,
    };
    let r = acl_check(
        &spec.sample(&g).unwrap(),
        &spec.sample(&g.refined()).unwrap(),
        &JumpOptions::default(),
    )
    .unwrap();
    assert_eq!(r.axes[1].nac, r.axes[1].slices);
    assert_eq!(r.axes[0].nac, 0);
    assert!(!r.is_acl_at_scale());
}

#[test]
fn classify_distinguishes_jumps_from_slopes() {
    let coarse: Vec<f64> = (0..9).map(|i| i as f64 / 8.0).collect();
    let fine: Vec<f64> = (0..17).map(|i| i as f64 / 16.0).collect();
    assert_eq!(
        classify_jump(&coarse, &fine, &JumpOptions::default()).verdict,
        SliceVerdict::AcAtScale
    );
    let step = |n: usize| {
        (0..n)
            .map(|i| if 2 * i < n { 0.0 } else { 1.0 })
            .collect::<Vec<f64>>()
    };
    assert_eq!(
        classify_jump(&step(9), &step(17), &JumpOptions::default()).verdict,
        SliceVerdict::Nac
    );
}

#[test]
fn slices_cover_the_grid() {
    let g = BoxGrid::new(vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0], vec![3, 4, 5]).unwrap();
    let u = ScalarField::zeros(g);
    assert_eq!(slices(&u, 0).unwrap().len(), 20);
    assert_eq!(slices(&u, 2).unwrap().len(), 12);
    assert!(slices(&u, 3).is_err());
}

#[test]
fn gradient_of_affine_field_is_exact() {
    let g = BoxGrid::unit_square(9);
    let u = FieldSpec::Affine {
        offset: 0.5,
        gradient: vec![2.0, -3.0],
    }
    .sample(&g)
    .unwrap();
    let gr = gradient(&u).unwrap();
    for i in 0..g.len() {
        assert!((gr.components[0].values()[i] - 2.0).abs() < 1e-12);
        assert!((gr.components[1].values()[i] + 3.0).abs() < 1e-12);
        assert!((gr.magnitude.values()[i] - 13f64.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn sobolev_report_for_a_smooth_field() {
    let g = BoxGrid::unit_square(17);
    let spec = FieldSpec::SumSquares { scale: 1.0 };
    let phi = PhiFunction::power(2.0, unit(2)).unwrap();
    let r = sobolev_report(
        &phi,
        &spec.sample(&g).unwrap(),
        &spec.sample(&g.refined()).unwrap(),
        &JumpOptions::default(),
        &NormOptions::default(),
    )
    .unwrap();
    assert!(r.u_in_lphi && r.gradient_in_lphi && r.acl_at_scale);
    assert!(r.sobolev_norm >= r.u_norm && r.sobolev_norm >= r.gradient_norm);
}

#[test]
fn acc_is_vacuous_for_smooth_fields() {
    let g = BoxGrid::unit_square(9);
    let spec = FieldSpec::Product { scale: 1.0 };
    let fam = segment_family(0, 5, g.domain()).unwrap();
    let phi = PhiFunction::power(2.0, unit(2)).unwrap();
    let r = acc_check(
        &spec.sample(&g).unwrap(),
        &spec.sample(&g.refined()).unwrap(),
        &fam,
        None,
        &phi,
        &AccOptions::default(),
    )
    .unwrap();
    assert_eq!(r.verdict, AccVerdict::VacuouslyAcc);
}

#[test]
fn acc_violation_without_a_witness() {
    // Every vertical curve crosses the jump, and that family has modulus 1.
    let g = BoxGrid::unit_square(9);
    let spec = FieldSpec::Step {
        axis: 1,
        center: 0.5,
        below: 0.0,
        at: 0.5,
        above: 1.0,
    };
    let fam = segment_family(1, 9, g.domain()).unwrap();
    let phi = PhiFunction::power(2.0, unit(2)).unwrap();
    let r = acc_check(
        &spec.sample(&g).unwrap(),
        &spec.sample(&g.refined()).unwrap(),
        &fam,
        None,
        &phi,
        &AccOptions::default(),
    )
    .unwrap();
    assert_eq!(r.flagged.len(), 9);
    assert_eq!(r.verdict, AccVerdict::AccViolatedAtScale);
    assert!(r.flagged_modulus.unwrap() > 0.5);
}

#[test]
fn fuglede_on_vanishing_constants() {
    let g = BoxGrid::unit_square(9);
    let seq: Vec<ScalarField> = (1..=64)
        .map(|i| ScalarField::constant(g.clone(), 1.0 / i as f64).unwrap())
        .collect();
    let fam = segment_family(1, 5, g.domain()).unwrap();
    let phi = PhiFunction::power(2.0, unit(2)).unwrap();
    let r = fuglede_subsequence(&phi, &seq, &fam, &FugledeOptions::default()).unwrap();
    assert_eq!(r.selected, vec![2, 4, 8, 16, 32, 64]);
    assert!(r.cauchy.iter().all(|c| c.holds));
    assert!(r.flagged.is_empty());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn liminf_is_the_tail_minimum(vals in proptest::collection::vec(0.0f64..10.0, 5 * 4), start in 0usize..5) {
        let g = BoxGrid::unit_square(2);
        let seq: Vec<ScalarField> = vals
            .chunks(4)
            .map(|c| ScalarField::new(g.clone(), c.to_vec(), FieldKind::Nonneg).unwrap())
            .collect();
        let r = liminf_representative(&seq, start).unwrap();
        for i in 0..4 {
            let m = seq[start..].iter().map(|f| f.values()[i]).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(r.values()[i], m);
        }
    }
}
