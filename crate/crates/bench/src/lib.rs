//! Shared fixtures for the benchmarks.

use orlicz_core::curve::segment_family;
use orlicz_core::generate::FieldSpec;
use orlicz_core::{BoxGrid, CurveFamily, PhiDescriptor, PhiFunction, ScalarField};

pub struct Fixture {
    pub grid: BoxGrid,
    pub field: ScalarField,
    pub family: CurveFamily,
}

/// A wave field on the `m x m` unit square and `curves` vertical segments.
pub fn fixture(m: usize, curves: usize) -> Fixture {
    let grid = BoxGrid::unit_square(m);
    let field = FieldSpec::Wave {
        amplitude: 1.0,
        frequency: 2.0,
        phase: 0.3,
        offset: 1.5,
    }
    .sample(&grid)
    .unwrap();
    let family = segment_family(1, curves, grid.domain()).unwrap();
    Fixture {
        grid,
        field,
        family,
    }
}

pub fn integrands(fx: &Fixture) -> Vec<(&'static str, PhiFunction)> {
    let d = fx.grid.domain().clone();
    vec![
        ("power2", PhiFunction::power(2.0, d.clone()).unwrap()),
        ("ramp", PhiFunction::ramp(d.clone())),
        (
            "double_phase",
            PhiFunction::new(
                PhiDescriptor::DoublePhase {
                    p: 2.0,
                    q: 3.0,
                    weight: orlicz_core::phi::AffineField {
                        offset: 0.0,
                        gradient: vec![1.0, 0.5],
                    },
                },
                d,
            )
            .unwrap(),
        ),
    ]
}
