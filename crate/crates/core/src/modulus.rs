//! φ-modulus of finite curve families.
//!
//! Admissible densities are nonnegative grid fields `u` with
//! `∫_γ u ds ≥ 1` for every curve; each constraint is a sparse row `a_γ`
//! (trapezoid weights along the curve times interpolation weights), so
//! admissibility reads `a_γ · u ≥ 1`. The modular modulus minimizes
//! `Σ w_i φ(x_i, u_i)` over that polytope by projected subgradient; the norm
//! modulus bisects on the level `τ` with an inner modular solve.

use std::cell::Cell;

use serde::{Deserialize, Serialize};

use crate::curve::{curve_integral, CurveFamily};
use crate::error::{input, Error, Result};
use crate::ext::{self, mul};
use crate::field::{check_compatible, luxemburg_norm, FieldKind, NormOptions, ScalarField};
use crate::grid::BoxGrid;
use crate::phi::PhiFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulusOptions {
    /// Subgradient iterations per (inner) solve.
    pub iterations: usize,
    /// Step constant `c` in `α_k = c · u_scale / √k`.
    pub step_constant: f64,
    /// Curve sampling step as a fraction of the smallest grid spacing.
    pub curve_step_factor: f64,
    /// Inner feasibility slack: `ρ(u/τ) ≤ 1 + feasibility_slack`.
    pub feasibility_slack: f64,
    /// Relative width at which the outer bisection on `τ` stops.
    pub outer_rel_tol: f64,
    /// Admissibility slack: `∫_γ u ds ≥ 1 - tol_feas`.
    pub tol_feas: f64,
}

impl Default for ModulusOptions {
    fn default() -> Self {
        Self {
            iterations: 5000,
            step_constant: 0.5,
            curve_step_factor: 0.5,
            feasibility_slack: 1e-3,
            outer_rel_tol: 1e-2,
            tol_feas: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusKind {
    Modular,
    Norm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusResult {
    pub kind: ModulusKind,
    /// The reported estimate (the upper end of the bracket).
    #[serde(with = "crate::ext::serde_ext")]
    pub estimate: f64,
    /// Largest level found infeasible (norm modulus), else 0.
    pub lower: f64,
    #[serde(with = "crate::ext::serde_ext")]
    pub upper: f64,
    /// `ρ_φ` and `‖·‖_φ` of the returned density.
    #[serde(with = "crate::ext::serde_ext")]
    pub density_modular: f64,
    #[serde(with = "crate::ext::serde_ext")]
    pub density_norm: f64,
    /// Per-curve `∫_γ u ds - 1` on the discrete constraint rows.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub outer_steps: usize,
    pub final_step: f64,
    #[serde(skip)]
    pub density: ScalarField,
}

impl ModulusResult {
    pub fn min_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Sparse constraint row.
#[derive(Debug, Clone)]
struct Row {
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl Row {
    fn dot(&self, u: &[f64]) -> f64 {
        self.idx
            .iter()
            .zip(&self.val)
            .map(|(&i, &a)| a * u[i])
            .sum()
    }
}

struct Problem<'a> {
    phi: &'a PhiFunction,
    grid: &'a BoxGrid,
    weights: Vec<f64>,
    nodes: Vec<f64>,
    rows: Vec<Row>,
}

impl<'a> Problem<'a> {
    fn new(
        phi: &'a PhiFunction,
        family: &CurveFamily,
        grid: &'a BoxGrid,
        opts: &ModulusOptions,
    ) -> Result<Self> {
        if !phi.is_convex() {
            return Err(Error::Unsupported(
                "modulus estimation needs a convex integrand".into(),
            ));
        }
        check_compatible(phi, grid)?;
        if !(opts.curve_step_factor > 0.0 && opts.step_constant > 0.0) {
            return input("curve_step_factor and step_constant must be positive");
        }
        let step = opts.curve_step_factor * grid.min_spacing();
        let rows = family
            .curves
            .iter()
            .enumerate()
            .map(|(ci, c)| {
                constraint_row(grid, c, step).map_err(|e| Error::Input(format!("curve {ci}: {e}")))
            })
            .collect::<Result<Vec<Row>>>()?;
        Ok(Self {
            phi,
            grid,
            weights: grid.trapezoid_weights(),
            nodes: grid.node_table(),
            rows,
        })
    }

    fn x(&self, i: usize) -> &[f64] {
        let d = self.grid.dim();
        &self.nodes[i * d..(i + 1) * d]
    }

    fn objective(&self, u: &[f64]) -> f64 {
        ext::par_sum(u.len(), |i| {
            mul(self.weights[i], self.phi.value(self.x(i), u[i]))
        })
    }

    /// Raise `u` until every row meets `rhs`. Rows are nonnegative, so a lift
    /// never breaks a row already satisfied.
    fn lift(&self, u: &mut [f64], rhs: f64) {
        for r in &self.rows {
            let s = r.dot(u);
            if s >= rhs {
                continue;
            }
            if s > 0.0 {
                let f = rhs / s;
                for &i in &r.idx {
                    u[i] *= f;
                }
            } else {
                let nrm2: f64 = r.val.iter().map(|a| a * a).sum();
                let c = (rhs - s) / nrm2;
                for (&i, &a) in r.idx.iter().zip(&r.val) {
                    u[i] += c * a;
                }
            }
            // Rounding can leave the product a hair short.
            let s2 = r.dot(u);
            if s2 < rhs {
                let f = rhs / s2 * (1.0 + 1e-15);
                for &i in &r.idx {
                    u[i] *= f;
                }
            }
        }
    }

    /// Constant start that satisfies every row.
    fn constant_start(&self, rhs: f64) -> Vec<f64> {
        let c = self
            .rows
            .iter()
            .map(|r| rhs / r.val.iter().sum::<f64>())
            .fold(0.0, f64::max);
        let mut u = vec![c; self.grid.len()];
        self.lift(&mut u, rhs);
        u
    }

    /// Minimize the discrete modular subject to `a_γ · u ≥ rhs`.
    fn solve(&self, rhs: f64, start: &[f64], opts: &ModulusOptions) -> Solve {
        let n = start.len();
        let mut u = start.to_vec();
        self.lift(&mut u, rhs);
        let mut best = u.clone();
        let mut best_val = self.objective(&u);
        let scale = u.iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let mut g = vec![0.0; n];
        let mut step = 0.0;
        let mut iterations = 0;
        for k in 1..=opts.iterations {
            if best_val == 0.0 {
                break;
            }
            iterations = k;
            let mut gmax = 0.0f64;
            for i in 0..n {
                g[i] = if self.weights[i] > 0.0 {
                    self.phi.derivative(self.x(i), u[i])
                } else {
                    0.0
                };
                gmax = gmax.max(g[i]);
            }
            if !(gmax > 0.0) || !gmax.is_finite() {
                break;
            }
            step = opts.step_constant * scale / (k as f64).sqrt();
            let a = step / gmax;
            for i in 0..n {
                u[i] = (u[i] - a * g[i]).max(0.0);
            }
            self.lift(&mut u, rhs);
            let v = self.objective(&u);
            if v < best_val {
                best_val = v;
                best.copy_from_slice(&u);
            }
        }
        Solve {
            u: best,
            value: best_val,
            iterations,
            final_step: step,
        }
    }

    fn residuals(&self, u: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.dot(u) - 1.0).collect()
    }

    fn field(&self, u: Vec<f64>) -> Result<ScalarField> {
        ScalarField::new(self.grid.clone(), u, FieldKind::Nonneg)
    }
}

struct Solve {
    u: Vec<f64>,
    value: f64,
    iterations: usize,
    final_step: f64,
}

fn constraint_row(grid: &BoxGrid, c: &crate::curve::Curve, step: f64) -> Result<Row> {
    let pos = c.sample_positions(step);
    let n = pos.len() - 1;
    let h = c.length() / n as f64;
    let mut entries: Vec<(usize, f64)> = Vec::new();
    let mut x = vec![0.0; grid.dim()];
    for (j, &s) in pos.iter().enumerate() {
        let tw = if j == 0 || j == n { 0.5 * h } else { h };
        c.point_into(s, &mut x);
        let st = grid
            .stencil(&x)
            .ok_or_else(|| Error::Input(format!("leaves the grid box at {x:?}")))?;
        entries.extend(st.entries().iter().map(|&(i, w)| (i, w * tw)));
    }
    entries.sort_by_key(|e| e.0);
    let mut row = Row {
        idx: Vec::new(),
        val: Vec::new(),
    };
    for (i, w) in entries {
        if row.idx.last() == Some(&i) {
            *row.val.last_mut().expect("paired") += w;
        } else {
            row.idx.push(i);
            row.val.push(w);
        }
    }
    if !(row.val.iter().sum::<f64>() > 0.0) {
        return input("curve has zero quadrature weight on the grid");
    }
    Ok(row)
}

fn empty_result(kind: ModulusKind, grid: &BoxGrid) -> ModulusResult {
    ModulusResult {
        kind,
        estimate: 0.0,
        lower: 0.0,
        upper: 0.0,
        density_modular: 0.0,
        density_norm: 0.0,
        residuals: Vec::new(),
        iterations: 0,
        outer_steps: 0,
        final_step: 0.0,
        density: ScalarField::zeros(grid.clone()),
    }
}

/// `M̃_φ(Γ) = inf Σ w_i φ(x_i, u_i)` over admissible grid densities.
pub fn estimate_modulus_modular(
    phi: &PhiFunction,
    family: &CurveFamily,
    grid: &BoxGrid,
    opts: &ModulusOptions,
) -> Result<ModulusResult> {
    let p = Problem::new(phi, family, grid, opts)?;
    if family.is_empty() {
        return Ok(empty_result(ModulusKind::Modular, grid));
    }
    let s = p.solve(1.0, &p.constant_start(1.0), opts);
    let residuals = p.residuals(&s.u);
    let density = p.field(s.u)?;
    let norm = luxemburg_norm(phi, &density, &NormOptions::default())?.value;
    Ok(ModulusResult {
        kind: ModulusKind::Modular,
        estimate: s.value,
        lower: 0.0,
        upper: s.value,
        density_modular: s.value,
        density_norm: norm,
        residuals,
        iterations: s.iterations,
        outer_steps: 0,
        final_step: s.final_step,
        density,
    })
}

/// `M_φ(Γ) = inf ‖u‖_φ` over admissible grid densities, by bisection on the
/// level `τ`: `τ` is feasible when some admissible `u` has
/// `ρ_φ(u/τ) ≤ 1 + slack`, i.e. `min ρ_φ(v)` over `a_γ · v ≥ 1/τ` is at
/// most `1 + slack`.
pub fn estimate_modulus_norm(
    phi: &PhiFunction,
    family: &CurveFamily,
    grid: &BoxGrid,
    opts: &ModulusOptions,
) -> Result<ModulusResult> {
    let p = Problem::new(phi, family, grid, opts)?;
    if family.is_empty() {
        return Ok(empty_result(ModulusKind::Norm, grid));
    }
    let nopts = NormOptions::default();
    let limit = 1.0 + opts.feasibility_slack;
    let iterations = Cell::new(0);
    let outer = Cell::new(0);
    let final_step = Cell::new(0.0);

    // Upper end: the norm of the modular minimizer.
    let s = p.solve(1.0, &p.constant_start(1.0), opts);
    iterations.set(s.iterations);
    let mut best_u = s.u;
    let mut hi = luxemburg_norm(phi, &p.field(best_u.clone())?, &nopts)?.value;
    if !hi.is_finite() {
        return Ok(ModulusResult {
            estimate: f64::INFINITY,
            upper: f64::INFINITY,
            ..empty_result(ModulusKind::Norm, grid)
        });
    }
    if hi == 0.0 {
        let density = p.field(best_u.clone())?;
        return Ok(ModulusResult {
            residuals: p.residuals(&best_u),
            iterations: iterations.get(),
            density,
            ..empty_result(ModulusKind::Norm, grid)
        });
    }

    let mut best_norm = hi;
    // Feasibility of level `tau`, warm-started from the best density so far.
    // A feasible solve also yields a density whose norm may improve the best.
    let probe = |tau: f64, best_u: &mut Vec<f64>, best_norm: &mut f64| -> Result<bool> {
        let start: Vec<f64> = best_u.iter().map(|x| x / tau).collect();
        let s = p.solve(1.0 / tau, &start, opts);
        iterations.set(iterations.get() + s.iterations);
        final_step.set(s.final_step);
        outer.set(outer.get() + 1);
        if s.value > limit {
            return Ok(false);
        }
        let u: Vec<f64> = s.u.iter().map(|x| x * tau).collect();
        let n = luxemburg_norm(phi, &p.field(u.clone())?, &nopts)?.value;
        if n < *best_norm {
            *best_norm = n;
            *best_u = u;
        }
        Ok(true)
    };

    // Lower end: halve until infeasible.
    let mut lo = 0.5 * hi;
    while probe(lo, &mut best_u, &mut best_norm)? {
        hi = lo.min(best_norm);
        lo = 0.5 * hi;
        if lo < 1e-12 * best_norm || outer.get() > 200 {
            lo = 0.0;
            break;
        }
    }
    while hi - lo > opts.outer_rel_tol * hi && outer.get() < 200 {
        let mid = 0.5 * (lo + hi);
        if probe(mid, &mut best_u, &mut best_norm)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let density = p.field(best_u.clone())?;
    let norm = luxemburg_norm(phi, &density, &nopts)?.value;
    let rho = crate::field::modular(phi, &density)?;
    Ok(ModulusResult {
        kind: ModulusKind::Norm,
        estimate: norm,
        lower: lo.min(norm),
        upper: norm,
        density_modular: rho,
        density_norm: norm,
        residuals: p.residuals(&best_u),
        iterations: iterations.get(),
        outer_steps: outer.get(),
        final_step: final_step.get(),
        density,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceThresholds {
    /// Required growth factor between consecutive levels.
    pub growth: f64,
    /// Required absolute size at the finest level.
    pub absolute: f64,
}

impl Default for DivergenceThresholds {
    fn default() -> Self {
        Self {
            growth: 4.0,
            absolute: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveDivergence {
    pub curve: usize,
    /// `∫_γ v ds` at each level.
    #[serde(with = "crate::ext::serde_ext::vec")]
    pub integrals: Vec<f64>,
    pub divergent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    /// `‖v‖_φ` at the finest level.
    #[serde(with = "crate::ext::serde_ext")]
    pub norm: f64,
    pub curves: Vec<CurveDivergence>,
    pub certified: bool,
}

/// Is `(coarse, fine)` a divergent pair?
pub fn is_divergent(coarse: f64, fine: f64, th: &DivergenceThresholds) -> bool {
    fine == f64::INFINITY || (fine >= th.growth * coarse && fine >= th.absolute)
}

/// Certify `v` as an exceptional-family witness at desk scale.
///
/// `levels` holds `v` at increasing refinement (at least two); level `j`
/// is integrated at half the step of level `j - 1`. A curve is divergent
/// when each consecutive pair of integrals is divergent. The witness is
/// certified when `‖v‖_φ` at the finest level is finite and every curve of
/// the family is divergent.
pub fn verify_exceptional_witness(
    levels: &[ScalarField],
    family: &CurveFamily,
    phi: &PhiFunction,
    thresholds: &DivergenceThresholds,
) -> Result<WitnessReport> {
    if levels.len() < 2 {
        return input("witness verification needs at least two refinement levels");
    }
    if levels.iter().any(|v| v.kind() != FieldKind::Nonneg) {
        return input("witness fields must be nonnegative");
    }
    let finest = levels.last().expect("two levels");
    let norm = luxemburg_norm(phi, finest, &NormOptions::default())?.value;
    let base = 0.5 * levels[0].grid().min_spacing();
    let curves = family
        .curves
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let integrals = levels
                .iter()
                .enumerate()
                .map(|(j, v)| curve_integral(v, c, base * 0.5f64.powi(j as i32)))
                .collect::<Result<Vec<f64>>>()?;
            let divergent = integrals
                .windows(2)
                .all(|w| is_divergent(w[0], w[1], thresholds));
            Ok(CurveDivergence {
                curve: ci,
                integrals,
                divergent,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let certified = norm.is_finite() && curves.iter().all(|c| c.divergent);
    Ok(WitnessReport {
        norm,
        curves,
        certified,
    })
}

/// An inclusion `Γ₁ ⊂ Γ₂` to test.
#[derive(Debug, Clone)]
pub struct NestedPair {
    pub small: CurveFamily,
    pub large: CurveFamily,
}

/// An exceptional family with its witness at refinement levels.
#[derive(Debug, Clone)]
pub struct WitnessedFamily {
    pub family: CurveFamily,
    pub witness: Vec<ScalarField>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityCheck {
    pub small: String,
    pub large: String,
    pub nested: bool,
    pub small_estimate: f64,
    pub large_estimate: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnionCheck {
    pub first_certified: bool,
    pub second_certified: bool,
    pub union_size: usize,
    #[serde(with = "crate::ext::serde_ext")]
    pub sum_norm: f64,
    /// `‖v₁‖ + ‖v₂‖`, the triangle bound for `‖v₁ + v₂‖`.
    #[serde(with = "crate::ext::serde_ext")]
    pub triangle_bound: f64,
    pub union_certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertiesReport {
    pub monotonicity: Vec<MonotonicityCheck>,
    pub unions: Vec<UnionCheck>,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl PropertiesReport {
    pub fn holds(&self) -> bool {
        self.monotonicity.iter().all(|m| m.holds) && self.unions.iter().all(|u| u.union_certified)
    }
}

/// Inclusion monotonicity of the norm-modulus estimate and certification of
/// unions of exceptional families by summed witnesses.
#[allow(clippy::too_many_arguments)]
pub fn modulus_properties_suite(
    phi: &PhiFunction,
    pairs: &[NestedPair],
    grid: &BoxGrid,
    opts: &ModulusOptions,
    unions: &[(WitnessedFamily, WitnessedFamily)],
    witness_phi: &PhiFunction,
    thresholds: &DivergenceThresholds,
    tolerance: (f64, f64),
) -> Result<PropertiesReport> {
    let (rel_tol, abs_tol) = tolerance;
    let mut monotonicity = Vec::new();
    for pair in pairs {
        let nested = pair.small.is_subfamily_of(&pair.large);
        let a = estimate_modulus_norm(phi, &pair.small, grid, opts)?.estimate;
        let b = estimate_modulus_norm(phi, &pair.large, grid, opts)?.estimate;
        monotonicity.push(MonotonicityCheck {
            small: pair.small.tag.clone(),
            large: pair.large.tag.clone(),
            nested,
            small_estimate: a,
            large_estimate: b,
            holds: nested && a <= b * (1.0 + rel_tol) + abs_tol,
        });
    }
    let mut out = Vec::new();
    for (f1, f2) in unions {
        if f1.witness.len() != f2.witness.len() {
            return input("paired witnesses need the same number of levels");
        }
        let r1 = verify_exceptional_witness(&f1.witness, &f1.family, witness_phi, thresholds)?;
        let r2 = verify_exceptional_witness(&f2.witness, &f2.family, witness_phi, thresholds)?;
        let sum = f1
            .witness
            .iter()
            .zip(&f2.witness)
            .map(|(a, b)| a.add(b))
            .collect::<Result<Vec<_>>>()?;
        let union = f1.family.union(&f2.family);
        let ru = verify_exceptional_witness(&sum, &union, witness_phi, thresholds)?;
        out.push(UnionCheck {
            first_certified: r1.certified,
            second_certified: r2.certified,
            union_size: union.len(),
            sum_norm: ru.norm,
            triangle_bound: r1.norm + r2.norm,
            union_certified: ru.certified,
        });
    }
    Ok(PropertiesReport {
        monotonicity,
        unions: out,
        rel_tol,
        abs_tol,
    })
}
