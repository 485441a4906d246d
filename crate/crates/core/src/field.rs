//! Sampled scalar fields, the modular `ρ_φ(f) = ∫ φ(x, |f(x)|) dx` and the
//! Luxemburg norm `‖f‖_φ = inf{λ > 0 : ρ_φ(f/λ) ≤ 1}`.

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::ext::{self, mul};
use crate::grid::BoxGrid;
use crate::phi::PhiFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Nonneg,
    Signed,
}

/// Nodal values on a [`BoxGrid`], `+inf` allowed.
///
/// Nodes can be marked as lying on a Lebesgue-null set (for example the
/// hyperplane `y = 0` where `|y|^-1` is infinite). Such nodes get zero
/// quadrature weight, so they never affect a modular, but their values are
/// still seen by interpolation along curves.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: BoxGrid,
    values: Vec<f64>,
    kind: FieldKind,
    null_nodes: Option<Vec<bool>>,
}

impl ScalarField {
    pub fn new(grid: BoxGrid, values: Vec<f64>, kind: FieldKind) -> Result<Self> {
        if values.len() != grid.len() {
            return input(format!(
                "field has {} values for {} grid nodes",
                values.len(),
                grid.len()
            ));
        }
        if let Some(i) = values.iter().position(|v| v.is_nan()) {
            return input(format!("field value at node {i} is NaN"));
        }
        if kind == FieldKind::Nonneg {
            if let Some(i) = values.iter().position(|v| *v < 0.0) {
                return input(format!(
                    "nonnegative field has value {} at node {i}",
                    values[i]
                ));
            }
        }
        Ok(Self {
            grid,
            values,
            kind,
            null_nodes: None,
        })
    }

    /// Sample `f` at every node.
    pub fn from_fn(grid: BoxGrid, kind: FieldKind, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let mut x = vec![0.0; grid.dim()];
        let values = (0..grid.len())
            .map(|i| {
                grid.node_into(i, &mut x);
                f(&x)
            })
            .collect();
        Self::new(grid, values, kind)
    }

    pub fn constant(grid: BoxGrid, c: f64) -> Result<Self> {
        let kind = if c >= 0.0 {
            FieldKind::Nonneg
        } else {
            FieldKind::Signed
        };
        let n = grid.len();
        Self::new(grid, vec![c; n], kind)
    }

    pub fn zeros(grid: BoxGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![0.0; n],
            kind: FieldKind::Nonneg,
            null_nodes: None,
        }
    }

    /// Mark nodes on a null set.
    pub fn with_null_nodes(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.grid.len() {
            return input(format!(
                "null mask has {} entries for {} nodes",
                mask.len(),
                self.grid.len()
            ));
        }
        self.null_nodes = mask.iter().any(|m| *m).then_some(mask);
        Ok(self)
    }

    /// Mark every node where `pred` holds as lying on a null set.
    pub fn with_null_where(self, pred: impl Fn(&[f64]) -> bool) -> Self {
        let grid = &self.grid;
        let mut x = vec![0.0; grid.dim()];
        let mask = (0..grid.len())
            .map(|i| {
                grid.node_into(i, &mut x);
                pred(&x)
            })
            .collect();
        self.with_null_nodes(mask).expect("mask sized to grid")
    }

    /// Mark the nodes holding `+inf` as lying on a null set.
    pub fn with_infinite_as_null(self) -> Self {
        let mask = self.values.iter().map(|v| v.is_infinite()).collect();
        self.with_null_nodes(mask).expect("mask sized to grid")
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn null_mask(&self) -> Option<&[bool]> {
        self.null_nodes.as_deref()
    }

    pub fn is_null(&self, i: usize) -> bool {
        self.null_nodes.as_ref().is_some_and(|m| m[i])
    }

    /// Trapezoid weights with null nodes zeroed.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let mut w = self.grid.trapezoid_weights();
        if let Some(mask) = &self.null_nodes {
            for (wi, &m) in w.iter_mut().zip(mask) {
                if m {
                    *wi = 0.0;
                }
            }
        }
        w
    }

    /// Pointwise `c * f` (`0 * inf = 0`). The null mask is kept.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let kind = if c >= 0.0 {
            self.kind
        } else {
            FieldKind::Signed
        };
        let values = self.values.iter().map(|&v| mul(c, v)).collect();
        Self {
            values,
            kind,
            ..self.clone()
        }
        .validated()
    }

    /// Pointwise `|f|`.
    pub fn abs(&self) -> Self {
        Self {
            values: self.values.iter().map(|v| v.abs()).collect(),
            kind: FieldKind::Nonneg,
            ..self.clone()
        }
    }

    /// Pointwise map, keeping the grid and null mask.
    pub fn map(&self, kind: FieldKind, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            kind,
            ..self.clone()
        }
        .validated()
    }

    /// Pointwise sum. Null masks are merged (a union of null sets is null).
    pub fn add(&self, other: &ScalarField) -> Result<Self> {
        if self.grid != other.grid {
            return input("fields live on different grids");
        }
        let kind = if self.kind == FieldKind::Nonneg && other.kind == FieldKind::Nonneg {
            FieldKind::Nonneg
        } else {
            FieldKind::Signed
        };
        let values: Vec<f64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        let mask = match (&self.null_nodes, &other.null_nodes) {
            (None, None) => None,
            (Some(m), None) | (None, Some(m)) => Some(m.clone()),
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| *x || *y).collect()),
        };
        Self {
            grid: self.grid.clone(),
            values,
            kind,
            null_nodes: mask,
        }
        .validated()
    }

    fn validated(self) -> Result<Self> {
        let mask = self.null_nodes.clone();
        let f = Self::new(self.grid, self.values, self.kind)?;
        Ok(Self {
            null_nodes: mask,
            ..f
        })
    }

    /// Trapezoid integral of the field (null nodes excluded).
    pub fn integral(&self) -> f64 {
        let w = self.quadrature_weights();
        ext::par_sum(self.len(), |i| mul(w[i], self.values[i]))
    }

    /// Interpolated value at `x`, `None` outside the grid box.
    pub fn interpolate(&self, x: &[f64]) -> Option<f64> {
        self.grid.stencil(x).map(|s| s.apply(&self.values))
    }
}

/// Precomputed weights and node coordinates for repeated modular evaluations
/// of one field.
pub(crate) struct Quadrature<'a> {
    field: &'a ScalarField,
    weights: Vec<f64>,
    nodes: Vec<f64>,
    dim: usize,
}

impl<'a> Quadrature<'a> {
    pub(crate) fn new(phi: &PhiFunction, field: &'a ScalarField) -> Result<Self> {
        check_compatible(phi, field.grid())?;
        Ok(Self {
            field,
            weights: field.quadrature_weights(),
            nodes: field.grid().node_table(),
            dim: field.grid().dim(),
        })
    }

    /// `ρ_φ(f / λ)`.
    pub(crate) fn modular_scaled(&self, phi: &PhiFunction, lambda: f64) -> f64 {
        let vals = self.field.values();
        let d = self.dim;
        ext::par_sum(vals.len(), |i| {
            let w = self.weights[i];
            if w == 0.0 {
                return 0.0;
            }
            let t = vals[i].abs() / lambda;
            mul(w, phi.value(&self.nodes[i * d..(i + 1) * d], t))
        })
    }
}

pub(crate) fn check_compatible(phi: &PhiFunction, grid: &BoxGrid) -> Result<()> {
    if phi.domain().dim() != grid.dim() {
        return input(format!(
            "integrand is {}-dimensional but the grid is {}-dimensional",
            phi.domain().dim(),
            grid.dim()
        ));
    }
    if !phi.domain().encloses(grid.domain()) {
        return input("grid box is not contained in the integrand's domain");
    }
    Ok(())
}

/// `ρ_φ(f) = ∫ φ(x, |f(x)|) dx` by trapezoid quadrature.
pub fn modular(phi: &PhiFunction, f: &ScalarField) -> Result<f64> {
    Ok(Quadrature::new(phi, f)?.modular_scaled(phi, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormOptions {
    pub tol: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl Default for NormOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            lambda_min: 1e-8,
            lambda_max: 1e8,
        }
    }
}

impl NormOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// One bisection probe: `(λ, ρ_φ(f/λ))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormProbe {
    pub lambda: f64,
    #[serde(with = "crate::ext::serde_ext")]
    pub modular: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormResult {
    #[serde(with = "crate::ext::serde_ext")]
    pub value: f64,
    pub lambda_lo: f64,
    #[serde(with = "crate::ext::serde_ext")]
    pub lambda_hi: f64,
    /// `ρ_φ(f / λ_hi)`.
    #[serde(with = "crate::ext::serde_ext")]
    pub modular_at_hi: f64,
    pub iterations: usize,
    pub trace: Vec<NormProbe>,
}

/// Luxemburg norm by bisection on `λ`, using that `λ ↦ ρ_φ(f/λ)` is
/// non-increasing. The reported value is the feasible end `λ_hi`.
pub fn luxemburg_norm(
    phi: &PhiFunction,
    f: &ScalarField,
    opts: &NormOptions,
) -> Result<NormResult> {
    if !(opts.tol > 0.0) {
        return input(format!("tolerance must be positive, got {}", opts.tol));
    }
    if !(opts.lambda_min > 0.0 && opts.lambda_min < opts.lambda_max && opts.lambda_max.is_finite())
    {
        return input("need 0 < lambda_min < lambda_max < inf");
    }
    let q = Quadrature::new(phi, f)?;
    let mut trace = Vec::new();
    let mut probe = |lambda: f64| {
        let r = q.modular_scaled(phi, lambda);
        trace.push(NormProbe { lambda, modular: r });
        r
    };

    let r_min = probe(opts.lambda_min);
    if r_min <= 1.0 {
        return Ok(NormResult {
            value: 0.0,
            lambda_lo: 0.0,
            lambda_hi: opts.lambda_min,
            modular_at_hi: r_min,
            iterations: 1,
            trace,
        });
    }
    let r_max = probe(opts.lambda_max);
    if r_max > 1.0 {
        return Ok(NormResult {
            value: f64::INFINITY,
            lambda_lo: opts.lambda_max,
            lambda_hi: f64::INFINITY,
            modular_at_hi: 0.0,
            iterations: 2,
            trace,
        });
    }
    let (mut lo, mut hi) = (opts.lambda_min, opts.lambda_max);
    let (mut r_lo, mut r_hi) = (r_min, r_max);
    let mut iterations = 2;
    while hi - lo > opts.tol && hi - lo > 1e-14 * hi && iterations < 10_000 {
        // Geometric steps while the bracket spans orders of magnitude.
        let mid = if hi > 4.0 * lo {
            (lo * hi).sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if mid <= lo || mid >= hi {
            break;
        }
        let r = probe(mid);
        iterations += 1;
        if r > r_lo || r < r_hi {
            return Err(Error::Integrity(format!(
                "modular not monotone in λ: ρ(f/{lo:e}) = {r_lo:e}, ρ(f/{mid:e}) = {r:e}, ρ(f/{hi:e}) = {r_hi:e}"
            )));
        }
        if r <= 1.0 {
            hi = mid;
            r_hi = r;
        } else {
            lo = mid;
            r_lo = r;
        }
    }
    // Prefer the shortest decimal in (lo, hi] that is still feasible, so that
    // norms with short exact values (1/2, 1/8, ...) are reported exactly.
    for digits in 1..=16 {
        let c = round_up_sig(lo, digits);
        if c > hi {
            continue;
        }
        if c == hi {
            break;
        }
        let r = probe(c);
        iterations += 1;
        if r <= 1.0 {
            hi = c;
            r_hi = r;
            break;
        }
    }
    Ok(NormResult {
        value: hi,
        lambda_lo: lo,
        lambda_hi: hi,
        modular_at_hi: r_hi,
        iterations,
        trace,
    })
}

/// Smallest number with `digits` significant decimal digits above `x > 0`.
fn round_up_sig(x: f64, digits: usize) -> f64 {
    let e = x.log10().floor() as i32;
    let scale = 10f64.powi(digits as i32 - 1 - e);
    let c = (x * scale).floor() + 1.0;
    let v = c / scale;
    if v > x {
        v
    } else {
        (c + 1.0) / scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderOptions {
    pub tol: f64,
    /// Upper end of the `t`-range scanned for the conjugate.
    pub conjugate_t_max: f64,
    pub norm: NormOptions,
}

impl Default for HolderOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            conjugate_t_max: 1e4,
            norm: NormOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderReport {
    pub lhs: f64,
    #[serde(with = "crate::ext::serde_ext")]
    pub rhs: f64,
    #[serde(with = "crate::ext::serde_ext")]
    pub norm_f: f64,
    #[serde(with = "crate::ext::serde_ext")]
    pub norm_g_conjugate: f64,
    pub pass: bool,
}

/// `∫|f||g| ≤ 2 ‖f‖_φ ‖g‖_{φ*}`.
pub fn holder_check(
    phi: &PhiFunction,
    f: &ScalarField,
    g: &ScalarField,
    opts: &HolderOptions,
) -> Result<HolderReport> {
    if !phi.is_convex() {
        return Err(Error::Unsupported(
            "the Hölder check needs a convex integrand".into(),
        ));
    }
    if f.grid() != g.grid() {
        return input("f and g live on different grids");
    }
    let w = f.quadrature_weights();
    let wg = g.quadrature_weights();
    let (fv, gv) = (f.values(), g.values());
    let lhs = ext::par_sum(f.len(), |i| {
        mul(w[i].min(wg[i]), mul(fv[i].abs(), gv[i].abs()))
    });
    let norm_f = luxemburg_norm(phi, f, &opts.norm)?.value;
    let conj = phi.conjugate(opts.conjugate_t_max)?;
    let norm_g = luxemburg_norm(&conj, g, &opts.norm)?.value;
    let rhs = 2.0 * mul(norm_f, norm_g);
    Ok(HolderReport {
        lhs,
        rhs,
        norm_f,
        norm_g_conjugate: norm_g,
        pass: lhs <= rhs + opts.tol,
    })
}

/// One side-by-side comparison in [`NormModularReport`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    #[serde(with = "crate::ext::serde_ext")]
    pub lhs: f64,
    #[serde(with = "crate::ext::serde_ext")]
    pub rhs: f64,
    /// Smallest `C` with `lhs ≤ C rhs`.
    #[serde(with = "crate::ext::serde_ext")]
    pub constant: f64,
    pub expected_constant: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormModularReport {
    #[serde(with = "crate::ext::serde_ext")]
    pub norm: f64,
    #[serde(with = "crate::ext::serde_ext")]
    pub modular: f64,
    /// `ρ(f) ≲ ‖f‖` when `‖f‖ < 1`.
    pub small_norm: Option<BoundCheck>,
    /// `‖f‖ ≲ max{ρ(f), ρ(f)^{1/q}}` under `(aDec)_q`.
    pub adec: Option<BoundCheck>,
    pub notes: Vec<String>,
}

impl NormModularReport {
    pub fn holds(&self) -> bool {
        self.small_norm.as_ref().is_none_or(|b| b.holds)
            && self.adec.as_ref().is_none_or(|b| b.holds)
    }
}

fn bound(lhs: f64, rhs: f64, expected: f64) -> BoundCheck {
    let constant = if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    };
    BoundCheck {
        lhs,
        rhs,
        constant,
        expected_constant: expected,
        holds: constant <= expected * (1.0 + 1e-6),
    }
}

/// Measure the norm–modular inequalities for one field.
pub fn norm_modular_bounds(
    phi: &PhiFunction,
    f: &ScalarField,
    opts: &NormOptions,
) -> Result<NormModularReport> {
    let norm = luxemburg_norm(phi, f, opts)?.value;
    let rho = modular(phi, f)?;
    let l = phi.meta().l_const;
    let mut notes = Vec::new();
    let small_norm = if norm < 1.0 {
        Some(bound(rho, norm, l))
    } else {
        notes.push("norm >= 1: small-norm bound not applicable".to_string());
        None
    };
    let adec = match phi.meta().q_dec {
        Some(q) => Some(bound(norm, rho.max(rho.powf(1.0 / q)), l)),
        None => {
            notes.push("integrand declares no (aDec) exponent: bound skipped".to_string());
            None
        }
    };
    Ok(NormModularReport {
        norm,
        modular: rho,
        small_norm,
        adec,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Membership {
    #[serde(with = "crate::ext::serde_ext")]
    pub norm: f64,
    /// `ρ(λ f)` for `λ = 1, 1/2, 1/4, ...` down to `λ_min`.
    #[serde(with = "crate::ext::serde_ext::vec")]
    pub modular_trace: Vec<f64>,
    pub member: bool,
}

/// `f ∈ L^φ`: finite norm and `ρ(λ f) → 0` along `λ = 2^-j`.
pub fn lphi_membership(
    phi: &PhiFunction,
    f: &ScalarField,
    opts: &NormOptions,
) -> Result<Membership> {
    let norm = luxemburg_norm(phi, f, opts)?.value;
    let q = Quadrature::new(phi, f)?;
    let mut trace = Vec::new();
    let mut lambda = 1.0;
    while lambda >= opts.lambda_min {
        trace.push(q.modular_scaled(phi, 1.0 / lambda));
        lambda *= 0.5;
    }
    let last = *trace.last().expect("lambda starts at 1");
    Ok(Membership {
        norm,
        member: norm.is_finite() && last <= 1e-6,
        modular_trace: trace,
    })
}
