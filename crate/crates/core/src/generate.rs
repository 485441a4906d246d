//! Named field and curve-family generators, deserializable from configs.

use serde::{Deserialize, Serialize};

use crate::curve::{parallel_family, segment_family, CurveFamily};
use crate::error::{input, Result};
use crate::field::{FieldKind, ScalarField};
use crate::grid::{BoxDomain, BoxGrid};
use crate::phi::AffineField;

fn zero() -> f64 {
    0.0
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

/// Field generators. Axes are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Constant {
        value: f64,
    },
    /// `offset + gradient . x`.
    Affine {
        offset: f64,
        gradient: Vec<f64>,
    },
    /// `|x[axis] - center|`.
    Abs {
        axis: usize,
        #[serde(default = "zero")]
        center: f64,
    },
    /// `scale / |x[axis] - center|^power`, `+inf` on the hyperplane, which
    /// is marked as a null set.
    InverseDistance {
        axis: usize,
        #[serde(default = "zero")]
        center: f64,
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "one")]
        power: f64,
    },
    /// `below`, `at`, `above` according to the sign of `x[axis] - center`.
    Step {
        axis: usize,
        #[serde(default = "zero")]
        center: f64,
        #[serde(default = "zero")]
        below: f64,
        #[serde(default = "one")]
        at: f64,
        #[serde(default = "two")]
        above: f64,
    },
    /// `height` on `|x[axis] - center| <= half_width`, else 0. With
    /// `null_core` the hyperplane `x[axis] = center` is marked null.
    Strip {
        axis: usize,
        #[serde(default = "zero")]
        center: f64,
        half_width: f64,
        height: f64,
        #[serde(default)]
        null_core: bool,
    },
    /// `scale * Σ x_k^2`.
    SumSquares {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale * Π x_k`.
    Product {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `amplitude * Π sin(frequency π x_k + phase) + offset`.
    Wave {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
        #[serde(default = "zero")]
        phase: f64,
        #[serde(default = "zero")]
        offset: f64,
    },
    /// `scale * exp(-|x - center|^2 / width^2)`.
    Gaussian {
        center: Vec<f64>,
        width: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `1` on nodes with `x[axis] == offset`, else `0`.
    HyperplaneMask {
        axis: usize,
        #[serde(default = "zero")]
        offset: f64,
    },
}

impl FieldSpec {
    /// Evaluate at a point (no null marking).
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            FieldSpec::Constant { value } => *value,
            FieldSpec::Affine { offset, gradient } => AffineField {
                offset: *offset,
                gradient: gradient.clone(),
            }
            .eval(x),
            FieldSpec::Abs { axis, center } => (x[*axis] - center).abs(),
            FieldSpec::InverseDistance {
                axis,
                center,
                scale,
                power,
            } => {
                let d = (x[*axis] - center).abs();
                if d == 0.0 {
                    f64::INFINITY
                } else if *power == 1.0 {
                    scale / d
                } else {
                    scale / d.powf(*power)
                }
            }
            FieldSpec::Step {
                axis,
                center,
                below,
                at,
                above,
            } => {
                let y = x[*axis] - center;
                if y < 0.0 {
                    *below
                } else if y == 0.0 {
                    *at
                } else {
                    *above
                }
            }
            FieldSpec::Strip {
                axis,
                center,
                half_width,
                height,
                ..
            } => {
                if (x[*axis] - center).abs() <= *half_width {
                    *height
                } else {
                    0.0
                }
            }
            FieldSpec::SumSquares { scale } => scale * x.iter().map(|v| v * v).sum::<f64>(),
            FieldSpec::Product { scale } => scale * x.iter().product::<f64>(),
            FieldSpec::Wave {
                amplitude,
                frequency,
                phase,
                offset,
            } => {
                let p: f64 = x
                    .iter()
                    .map(|v| (frequency * std::f64::consts::PI * v + phase).sin())
                    .product();
                amplitude * p + offset
            }
            FieldSpec::Gaussian {
                center,
                width,
                scale,
            } => {
                let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                scale * (-r2 / (width * width)).exp()
            }
            FieldSpec::HyperplaneMask { axis, offset } => f64::from(x[*axis] == *offset),
        }
    }

    fn axis(&self) -> Option<usize> {
        match self {
            FieldSpec::Abs { axis, .. }
            | FieldSpec::InverseDistance { axis, .. }
            | FieldSpec::Step { axis, .. }
            | FieldSpec::Strip { axis, .. }
            | FieldSpec::HyperplaneMask { axis, .. } => Some(*axis),
            _ => None,
        }
    }

    /// Sample on a grid, marking declared null sets.
    pub fn sample(&self, grid: &BoxGrid) -> Result<ScalarField> {
        if let Some(a) = self.axis() {
            if a >= grid.dim() {
                return input(format!(
                    "generator axis {a} out of range for a {}-d grid",
                    grid.dim()
                ));
            }
        }
        if let FieldSpec::Gaussian { center, width, .. } = self {
            if center.len() != grid.dim() || !(*width > 0.0) {
                return input("gaussian needs a center per axis and a positive width");
            }
        }
        if let FieldSpec::Strip { half_width, .. } = self {
            if !(*half_width >= 0.0) {
                return input("strip half_width must be >= 0");
            }
        }
        let mut x = vec![0.0; grid.dim()];
        let values: Vec<f64> = (0..grid.len())
            .map(|i| {
                grid.node_into(i, &mut x);
                self.eval(&x)
            })
            .collect();
        let kind = if values.iter().all(|v| *v >= 0.0) {
            FieldKind::Nonneg
        } else {
            FieldKind::Signed
        };
        let f = ScalarField::new(grid.clone(), values, kind)?;
        Ok(match self {
            FieldSpec::InverseDistance { axis, center, .. }
            | FieldSpec::Strip {
                axis,
                center,
                null_core: true,
                ..
            } => {
                let (a, c) = (*axis, *center);
                f.with_null_where(move |x| x[a] == c)
            }
            _ => f,
        })
    }
}

/// Curve-family generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilySpec {
    /// Full-length segments parallel to `axis`.
    Segments { axis: usize, count: usize },
    /// Planar parallel lines clipped to the box.
    Parallel { direction: [f64; 2], count: usize },
    /// Concatenation of several families.
    Union { members: Vec<FamilySpec> },
}

impl FamilySpec {
    pub fn build(&self, domain: &BoxDomain) -> Result<CurveFamily> {
        match self {
            FamilySpec::Segments { axis, count } => segment_family(*axis, *count, domain),
            FamilySpec::Parallel { direction, count } => {
                parallel_family(*direction, *count, domain)
            }
            FamilySpec::Union { members } => {
                let mut out = CurveFamily::empty();
                for (i, m) in members.iter().enumerate() {
                    let f = m.build(domain)?;
                    out = if i == 0 { f } else { out.union(&f) };
                }
                Ok(out)
            }
        }
    }
}
