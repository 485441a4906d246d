//! Test corpus and independent oracles shared by the integration targets.

#![allow(dead_code)]

use orlicz_core::generate::{FamilySpec, FieldSpec};
use orlicz_core::{BoxDomain, BoxGrid, CurveFamily, ScalarField};

pub fn unit(dim: usize) -> BoxDomain {
    BoxDomain::unit(dim)
}

/// Twenty fields on the unit square, none with null nodes.
pub fn field_specs() -> Vec<FieldSpec> {
    use FieldSpec::*;
    vec![
        Constant { value: 1.0 },
        Constant { value: 0.37 },
        Constant { value: 4.5 },
        Affine {
            offset: 0.2,
            gradient: vec![1.0, -0.5],
        },
        Affine {
            offset: -0.3,
            gradient: vec![0.7, 0.9],
        },
        Affine {
            offset: 1.0,
            gradient: vec![2.0, 3.0],
        },
        Abs {
            axis: 0,
            center: 0.5,
        },
        Abs {
            axis: 1,
            center: 0.3,
        },
        SumSquares { scale: 1.0 },
        SumSquares { scale: 2.5 },
        Product { scale: 1.0 },
        Product { scale: 6.0 },
        Wave {
            amplitude: 1.0,
            frequency: 1.0,
            phase: 0.0,
            offset: 0.0,
        },
        Wave {
            amplitude: 2.0,
            frequency: 3.0,
            phase: 0.4,
            offset: 0.5,
        },
        Wave {
            amplitude: 0.5,
            frequency: 2.0,
            phase: 1.0,
            offset: 1.0,
        },
        Gaussian {
            center: vec![0.5, 0.5],
            width: 0.3,
            scale: 1.0,
        },
        Gaussian {
            center: vec![0.2, 0.8],
            width: 0.1,
            scale: 3.0,
        },
        Step {
            axis: 0,
            center: 0.5,
            below: 0.0,
            at: 1.0,
            above: 2.0,
        },
        Strip {
            axis: 1,
            center: 0.5,
            half_width: 0.2,
            height: 1.5,
            null_core: false,
        },
        Strip {
            axis: 0,
            center: 0.25,
            half_width: 0.05,
            height: 8.0,
            null_core: false,
        },
    ]
}

pub fn corpus(grid: &BoxGrid) -> Vec<ScalarField> {
    field_specs()
        .iter()
        .map(|s| s.sample(grid).expect("corpus field"))
        .collect()
}

/// Five families on the unit square with moduli of order one.
pub fn family_specs() -> Vec<FamilySpec> {
    use FamilySpec::*;
    vec![
        Segments { axis: 1, count: 33 },
        Segments { axis: 0, count: 17 },
        Segments { axis: 1, count: 5 },
        Union {
            members: vec![
                Segments { axis: 1, count: 9 },
                Segments { axis: 0, count: 9 },
            ],
        },
        Union {
            members: vec![
                Segments { axis: 1, count: 3 },
                Segments { axis: 0, count: 17 },
            ],
        },
    ]
}

pub fn families(domain: &BoxDomain) -> Vec<CurveFamily> {
    family_specs()
        .iter()
        .map(|s| s.build(domain).expect("corpus family"))
        .collect()
}

/// Composite trapezoid weights on a uniform tensor grid, built directly
/// from the node counts and box.
pub fn trapezoid(lower: &[f64], upper: &[f64], counts: &[usize]) -> Vec<f64> {
    let axis_w: Vec<Vec<f64>> = (0..counts.len())
        .map(|k| {
            let m = counts[k];
            let h = (upper[k] - lower[k]) / (m - 1) as f64;
            (0..m)
                .map(|j| if j == 0 || j == m - 1 { 0.5 * h } else { h })
                .collect()
        })
        .collect();
    let total: usize = counts.iter().product();
    let mut out = Vec::with_capacity(total);
    for i in 0..total {
        let mut rest = i;
        let mut w = 1.0;
        for k in (0..counts.len()).rev() {
            w *= axis_w[k][rest % counts[k]];
            rest /= counts[k];
        }
        out.push(w);
    }
    out
}

/// Classical discrete `L^p` norm `(Σ w_i |f_i|^p)^(1/p)`.
pub fn discrete_lp(f: &ScalarField, p: f64) -> f64 {
    let g = f.grid();
    let w = trapezoid(g.lower(), g.upper(), g.counts());
    let s: f64 = w
        .iter()
        .zip(f.values())
        .map(|(w, v)| w * v.abs().powf(p))
        .sum();
    s.powf(1.0 / p)
}

/// `log2(e_coarse / e_fine)` for every consecutive pair.
pub fn orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}
