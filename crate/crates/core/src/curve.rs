//! Rectifiable curves as arc-length-parametrized polylines.

use serde::Serialize;

use crate::error::{input, Result};
use crate::ext::mul;
use crate::field::{FieldKind, ScalarField};
use crate::grid::{BoxDomain, BoxGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    vertices: Vec<Vec<f64>>,
    /// `cumulative[i]` = arc length from the first vertex to vertex `i`.
    cumulative: Vec<f64>,
}

impl Curve {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        if vertices.len() < 2 {
            return input("a curve needs at least two vertices");
        }
        let n = vertices[0].len();
        if n == 0 || vertices.iter().any(|v| v.len() != n) {
            return input("curve vertices must share a positive dimension");
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return input("curve vertices must be finite");
        }
        let mut cumulative = Vec::with_capacity(vertices.len());
        cumulative.push(0.0);
        for (i, w) in vertices.windows(2).enumerate() {
            let d = dist(&w[0], &w[1]);
            if d == 0.0 {
                return input(format!("vertices {i} and {} coincide", i + 1));
            }
            cumulative.push(cumulative[i] + d);
        }
        Ok(Self {
            vertices,
            cumulative,
        })
    }

    pub fn segment(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        Self::new(vec![a, b])
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().expect("at least two vertices")
    }

    /// Point at arc length `s`, clamped to `[0, ℓ]`.
    pub fn point_at(&self, s: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.point_into(s, &mut x);
        x
    }

    pub fn point_into(&self, s: f64, x: &mut [f64]) {
        let s = s.clamp(0.0, self.length());
        let seg = self
            .cumulative
            .partition_point(|&c| c <= s)
            .clamp(1, self.vertices.len() - 1)
            - 1;
        let (s0, s1) = (self.cumulative[seg], self.cumulative[seg + 1]);
        let r = ((s - s0) / (s1 - s0)).clamp(0.0, 1.0);
        let (a, b) = (&self.vertices[seg], &self.vertices[seg + 1]);
        for k in 0..x.len() {
            x[k] = if r == 1.0 {
                b[k]
            } else {
                a[k] + r * (b[k] - a[k])
            };
        }
    }

    /// The sub-curve on arc-length interval `[a, b]`.
    pub fn restrict(&self, a: f64, b: f64) -> Result<Self> {
        if !(0.0 <= a && a < b && b <= self.length() * (1.0 + 1e-12)) {
            return input(format!(
                "restriction [{a}, {b}] not inside [0, {}]",
                self.length()
            ));
        }
        let mut v = vec![self.point_at(a)];
        for (i, &c) in self.cumulative.iter().enumerate() {
            if c > a && c < b {
                v.push(self.vertices[i].clone());
            }
        }
        v.push(self.point_at(b));
        v.dedup();
        Self::new(v)
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        Self::new(v).expect("reversal keeps vertices distinct")
    }

    /// Arc-length sample positions: `N = ceil(ℓ/step)` equal sub-intervals.
    pub fn sample_positions(&self, step: f64) -> Vec<f64> {
        let l = self.length();
        let n = ((l / step).ceil() as usize).max(1);
        (0..=n)
            .map(|j| if j == n { l } else { l * j as f64 / n as f64 })
            .collect()
    }

    pub fn bounding_box_within(&self, domain: &BoxDomain) -> bool {
        self.vertices.iter().all(|v| domain.contains(v, 1e-9))
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// A finite curve family with a description of where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFamily {
    pub curves: Vec<Curve>,
    pub tag: String,
}

impl CurveFamily {
    pub fn new(curves: Vec<Curve>, tag: impl Into<String>) -> Self {
        Self {
            curves,
            tag: tag.into(),
        }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), "empty")
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    /// Sub-family by index.
    pub fn select(&self, indices: &[usize], tag: impl Into<String>) -> Self {
        Self::new(
            indices.iter().map(|&i| self.curves[i].clone()).collect(),
            tag,
        )
    }

    /// Union (concatenation, duplicates by vertex equality dropped).
    pub fn union(&self, other: &CurveFamily) -> Self {
        let mut curves = self.curves.clone();
        for c in &other.curves {
            if !curves.contains(c) {
                curves.push(c.clone());
            }
        }
        Self::new(curves, format!("{} ∪ {}", self.tag, other.tag))
    }

    /// Every curve of `self` appears (by vertices) in `other`.
    pub fn is_subfamily_of(&self, other: &CurveFamily) -> bool {
        self.curves.iter().all(|c| other.curves.contains(c))
    }

    pub fn within(&self, domain: &BoxDomain) -> bool {
        self.curves.iter().all(|c| c.bounding_box_within(domain))
    }
}

/// Serializable summary of a family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilySummary {
    pub tag: String,
    pub count: usize,
    pub total_length: f64,
}

impl From<&CurveFamily> for FamilySummary {
    fn from(f: &CurveFamily) -> Self {
        Self {
            tag: f.tag.clone(),
            count: f.len(),
            total_length: f.curves.iter().map(Curve::length).sum(),
        }
    }
}

/// Values of `u` along `γ` at the positions of [`Curve::sample_positions`].
pub fn sample_along(u: &ScalarField, gamma: &Curve, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return input(format!("step must be positive, got {step}"));
    }
    if gamma.dim() != u.grid().dim() {
        return input("curve and field dimensions differ");
    }
    let mut x = vec![0.0; gamma.dim()];
    gamma
        .sample_positions(step)
        .into_iter()
        .map(|s| {
            gamma.point_into(s, &mut x);
            u.interpolate(&x)
                .ok_or_else(|| crate::Error::Input(format!("curve leaves the grid box at {x:?}")))
        })
        .collect()
}

/// `∫_γ u ds` by the composite trapezoid rule at spacing `≤ step`, with
/// multilinear interpolation of `u`. `+inf` samples make the result `+inf`.
pub fn curve_integral(u: &ScalarField, gamma: &Curve, step: f64) -> Result<f64> {
    if u.kind() != FieldKind::Nonneg {
        return input("curve integrals need a nonnegative field");
    }
    let vals = sample_along(u, gamma, step)?;
    let n = vals.len() - 1;
    let h = gamma.length() / n as f64;
    let inner: f64 = vals[1..n].iter().sum();
    Ok(mul(h, inner) + mul(0.5 * h, vals[0]) + mul(0.5 * h, vals[n]))
}

/// Curve integral of each family member.
pub fn family_integrals(u: &ScalarField, family: &CurveFamily, step: f64) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    family
        .curves
        .par_iter()
        .map(|c| curve_integral(u, c, step))
        .collect()
}

/// `count` full-length segments parallel to `axis` (0-based) at uniformly
/// spaced transverse positions, endpoints included (`count = 1` gives the
/// midpoint). In three dimensions the transverse positions form a
/// `count x count` lattice.
pub fn segment_family(axis: usize, count: usize, domain: &BoxDomain) -> Result<CurveFamily> {
    let n = domain.dim();
    if axis >= n {
        return input(format!("axis {axis} out of range for a {n}-d box"));
    }
    if count == 0 {
        return input("segment family needs count >= 1");
    }
    let pos = |k: usize, j: usize| {
        let (a, b) = (domain.lower[k], domain.upper[k]);
        if count == 1 {
            0.5 * (a + b)
        } else if j + 1 == count {
            b
        } else {
            a + (b - a) * j as f64 / (count - 1) as f64
        }
    };
    let transverse: Vec<usize> = (0..n).filter(|&k| k != axis).collect();
    let total = count.pow(transverse.len() as u32);
    let mut curves = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rem = idx;
        let mut a = vec![0.0; n];
        for &k in transverse.iter().rev() {
            a[k] = pos(k, rem % count);
            rem /= count;
        }
        let mut b = a.clone();
        a[axis] = domain.lower[axis];
        b[axis] = domain.upper[axis];
        curves.push(Curve::segment(a, b)?);
    }
    Ok(CurveFamily::new(
        curves,
        format!("segments(axis={axis}, count={count})"),
    ))
}

/// Planar family of `count` parallel lines with the given direction,
/// clipped to the box. Offsets are cell-centred across the box's extent in
/// the normal direction, so no line degenerates to a corner point.
pub fn parallel_family(
    direction: [f64; 2],
    count: usize,
    domain: &BoxDomain,
) -> Result<CurveFamily> {
    if domain.dim() != 2 {
        return input("parallel families are planar");
    }
    let norm = (direction[0].powi(2) + direction[1].powi(2)).sqrt();
    if !(norm > 0.0 && norm.is_finite()) || count == 0 {
        return input("need a nonzero direction and count >= 1");
    }
    let d = [direction[0] / norm, direction[1] / norm];
    let nrm = [-d[1], d[0]];
    let corners = [
        [domain.lower[0], domain.lower[1]],
        [domain.lower[0], domain.upper[1]],
        [domain.upper[0], domain.lower[1]],
        [domain.upper[0], domain.upper[1]],
    ];
    let proj: Vec<f64> = corners
        .iter()
        .map(|c| c[0] * nrm[0] + c[1] * nrm[1])
        .collect();
    let cmin = proj.iter().cloned().fold(f64::INFINITY, f64::min);
    let cmax = proj.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut curves = Vec::new();
    for j in 0..count {
        let c = cmin + (cmax - cmin) * (j as f64 + 0.5) / count as f64;
        let p0 = [c * nrm[0], c * nrm[1]];
        // Slab clipping of p0 + s d.
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for k in 0..2 {
            if d[k].abs() < 1e-15 {
                if p0[k] < domain.lower[k] || p0[k] > domain.upper[k] {
                    lo = f64::INFINITY;
                }
                continue;
            }
            let s1 = (domain.lower[k] - p0[k]) / d[k];
            let s2 = (domain.upper[k] - p0[k]) / d[k];
            lo = lo.max(s1.min(s2));
            hi = hi.min(s1.max(s2));
        }
        if hi - lo <= 1e-12 {
            continue;
        }
        let clampv = |s: f64| -> Vec<f64> {
            (0..2)
                .map(|k| (p0[k] + s * d[k]).clamp(domain.lower[k], domain.upper[k]))
                .collect()
        };
        curves.push(Curve::segment(clampv(lo), clampv(hi))?);
    }
    Ok(CurveFamily::new(
        curves,
        format!(
            "parallel(direction=[{}, {}], count={count})",
            direction[0], direction[1]
        ),
    ))
}

/// Curves whose sampled image touches a node where `indicator > 0`
/// (a node touches when it carries positive interpolation weight).
pub fn curves_meeting_set(
    family: &CurveFamily,
    indicator: &ScalarField,
    step: f64,
) -> Result<CurveFamily> {
    if !(step > 0.0) {
        return input(format!("step must be positive, got {step}"));
    }
    let grid: &BoxGrid = indicator.grid();
    let vals = indicator.values();
    let mut keep = Vec::new();
    let mut x = vec![0.0; grid.dim()];
    for (ci, c) in family.curves.iter().enumerate() {
        let mut hit = false;
        for s in c.sample_positions(step) {
            c.point_into(s, &mut x);
            let st = grid.stencil(&x).ok_or_else(|| {
                crate::Error::Input(format!("curve leaves the grid box at {x:?}"))
            })?;
            if st.entries().iter().any(|&(i, _)| vals[i] > 0.0) {
                hit = true;
                break;
            }
        }
        if hit {
            keep.push(ci);
        }
    }
    Ok(family.select(&keep, format!("{} meeting set", family.tag)))
}
