//! Discrete absolute-continuity diagnostics, finite-difference gradients,
//! Orlicz–Sobolev reports and Fuglede subsequences.
//!
//! "Absolutely continuous at scale" is decided from two resolutions `h` and
//! `h/2`: a genuine jump keeps its size when the grid is refined, while a
//! Lipschitz increment halves.

use serde::{Deserialize, Serialize};

use crate::curve::{curve_integral, sample_along, CurveFamily};
use crate::error::{input, Result};
use crate::field::{lphi_membership, luxemburg_norm, FieldKind, NormOptions, ScalarField};
use crate::grid::BoxGrid;
use crate::modulus::{
    estimate_modulus_norm, is_divergent, verify_exceptional_witness, DivergenceThresholds,
    ModulusOptions, WitnessReport,
};
use crate::phi::PhiFunction;

/// An axis-parallel grid line: `axis`, the transverse node indices and the
/// values along the line.
#[derive(Debug, Clone, PartialEq)]
pub struct LineSlice {
    pub axis: usize,
    /// Node indices on the other axes (in axis order, `axis` omitted).
    pub transverse: Vec<usize>,
    /// Coordinates on the other axes.
    pub coords: Vec<f64>,
    pub values: Vec<f64>,
}

/// All slices of `u` along `axis`.
pub fn slices(u: &ScalarField, axis: usize) -> Result<Vec<LineSlice>> {
    let g = u.grid();
    if axis >= g.dim() {
        return input(format!("axis {axis} out of range for a {}-d grid", g.dim()));
    }
    let others: Vec<usize> = (0..g.dim()).filter(|&k| k != axis).collect();
    let count: usize = others.iter().map(|&k| g.counts()[k]).product();
    let strides = g.strides();
    let mut out = Vec::with_capacity(count);
    for t in 0..count {
        let mut rem = t;
        let mut transverse = vec![0; others.len()];
        for (slot, &k) in others.iter().enumerate().rev() {
            transverse[slot] = rem % g.counts()[k];
            rem /= g.counts()[k];
        }
        let base: usize = others
            .iter()
            .zip(&transverse)
            .map(|(&k, &j)| j * strides[k])
            .sum();
        let values = (0..g.counts()[axis])
            .map(|j| u.values()[base + j * strides[axis]])
            .collect();
        let coords = others
            .iter()
            .zip(&transverse)
            .map(|(&k, &j)| g.coordinate(k, j))
            .collect();
        out.push(LineSlice {
            axis,
            transverse,
            coords,
            values,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceVerdict {
    AcAtScale,
    Nac,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpOptions {
    /// Fixed jump tolerance; `None` uses `10 ×` the median fine increment.
    pub jump_tol: Option<f64>,
    /// A jump counts as persistent when it shrinks by less than this factor.
    pub shrink: f64,
}

impl Default for JumpOptions {
    fn default() -> Self {
        Self {
            jump_tol: None,
            shrink: 1.5,
        }
    }
}

fn increment(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (b - a).abs()
    }
}

/// Largest single-step increment and its position.
fn max_increment(v: &[f64]) -> (f64, usize) {
    v.windows(2)
        .enumerate()
        .map(|(j, w)| (increment(w[0], w[1]), j))
        .fold((0.0, 0), |a, b| if b.0 > a.0 { b } else { a })
}

fn median_increment(v: &[f64]) -> f64 {
    let mut inc: Vec<f64> = v.windows(2).map(|w| increment(w[0], w[1])).collect();
    if inc.is_empty() {
        return 0.0;
    }
    inc.sort_by(f64::total_cmp);
    inc[inc.len() / 2]
}

/// Two-resolution jump classification shared by slices and curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpStats {
    pub coarse_max: f64,
    pub fine_max: f64,
    /// Largest two-step increment at the fine resolution (the size of a
    /// jump smeared over one cell).
    pub fine_two_step: f64,
    /// Position (sample index) of the fine maximum.
    pub fine_at: usize,
    pub tol: f64,
    pub verdict: SliceVerdict,
}

pub fn classify_jump(coarse: &[f64], fine: &[f64], opts: &JumpOptions) -> JumpStats {
    let (cmax, _) = max_increment(coarse);
    let (fmax, at) = max_increment(fine);
    let scale = fine
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = opts
        .jump_tol
        .unwrap_or_else(|| (10.0 * median_increment(fine)).max(1e-9 * (1.0 + scale)));
    let two = fine
        .windows(3)
        .map(|w| increment(w[0], w[2]))
        .fold(0.0, f64::max);
    let verdict = if fmax > tol && (fmax.is_infinite() || cmax < opts.shrink * fmax) {
        SliceVerdict::Nac
    } else if fmax <= tol.max(cmax) {
        SliceVerdict::AcAtScale
    } else {
        SliceVerdict::Indeterminate
    };
    JumpStats {
        coarse_max: cmax,
        fine_max: fmax,
        fine_two_step: two,
        fine_at: at,
        tol,
        verdict,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceReport {
    pub axis: usize,
    pub coords: Vec<f64>,
    /// Coordinate along the axis of the largest fine increment (cell start).
    pub location: f64,
    pub stats: JumpStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisReport {
    pub axis: usize,
    pub slices: usize,
    pub ac: usize,
    pub nac: usize,
    pub indeterminate: usize,
    /// Discrete surrogate of the measure of transverse points whose line is
    /// not absolutely continuous.
    pub nac_fraction: f64,
    /// Slices that are not AC-at-scale.
    pub failing: Vec<SliceReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcReport {
    pub axes: Vec<AxisReport>,
}

impl AcReport {
    pub fn is_acl_at_scale(&self) -> bool {
        self.axes.iter().all(|a| a.nac == 0 && a.indeterminate == 0)
    }
}

/// Per-axis, per-slice two-resolution jump check. `fine` must sample the
/// same function on the refinement of `coarse`'s grid.
pub fn acl_check(coarse: &ScalarField, fine: &ScalarField, opts: &JumpOptions) -> Result<AcReport> {
    if !fine.grid().is_refinement_of(coarse.grid()) {
        return input("fine field's grid is not the refinement of the coarse grid");
    }
    let g = fine.grid();
    let mut axes = Vec::new();
    for axis in 0..g.dim() {
        let cs = slices(coarse, axis)?;
        let fs = slices(fine, axis)?;
        let fine_counts: Vec<usize> = (0..g.dim())
            .filter(|&k| k != axis)
            .map(|k| g.counts()[k])
            .collect();
        let (mut ac, mut nac, mut ind) = (0, 0, 0);
        let mut failing = Vec::new();
        for c in &cs {
            // Coarse transverse index J sits at fine index 2J.
            let fi = c
                .transverse
                .iter()
                .zip(&fine_counts)
                .fold(0, |acc, (&j, &m)| acc * m + 2 * j);
            let f = &fs[fi];
            let stats = classify_jump(&c.values, &f.values, opts);
            match stats.verdict {
                SliceVerdict::AcAtScale => ac += 1,
                SliceVerdict::Nac => nac += 1,
                SliceVerdict::Indeterminate => ind += 1,
            }
            if stats.verdict != SliceVerdict::AcAtScale {
                failing.push(SliceReport {
                    axis,
                    coords: f.coords.clone(),
                    location: g.coordinate(axis, stats.fine_at),
                    stats,
                });
            }
        }
        let total = cs.len();
        axes.push(AxisReport {
            axis,
            slices: total,
            ac,
            nac,
            indeterminate: ind,
            nac_fraction: nac as f64 / total as f64,
            failing,
        });
    }
    Ok(AcReport { axes })
}

/// Finite-difference partial derivatives and the gradient magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub components: Vec<ScalarField>,
    pub magnitude: ScalarField,
}

/// Central differences inside, second-order one-sided differences on the
/// faces (first order when an axis has only two nodes).
pub fn gradient(u: &ScalarField) -> Result<GradientField> {
    if u.values().iter().any(|v| !v.is_finite()) {
        return input("gradient needs a finite-valued field");
    }
    let g = u.grid();
    let strides = g.strides();
    let vals = u.values();
    let mut components = Vec::with_capacity(g.dim());
    let mut mag2 = vec![0.0; g.len()];
    for k in 0..g.dim() {
        let m = g.counts()[k];
        let h = g.spacing(k);
        let s = strides[k];
        let d: Vec<f64> = (0..g.len())
            .map(|i| {
                let j = (i / s) % m;
                let at = |o: isize| vals[(i as isize + o * s as isize) as usize];
                if m == 2 {
                    (vals[i - j * s + s] - vals[i - j * s]) / h
                } else if j == 0 {
                    (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
                } else if j + 1 == m {
                    (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * h)
                } else {
                    (at(1) - at(-1)) / (2.0 * h)
                }
            })
            .collect();
        for (a, b) in mag2.iter_mut().zip(&d) {
            *a += b * b;
        }
        let mut f = ScalarField::new(g.clone(), d, FieldKind::Signed)?;
        if let Some(mask) = u.null_mask() {
            f = f.with_null_nodes(mask.to_vec())?;
        }
        components.push(f);
    }
    let mut magnitude = ScalarField::new(
        g.clone(),
        mag2.into_iter().map(f64::sqrt).collect(),
        FieldKind::Nonneg,
    )?;
    if let Some(mask) = u.null_mask() {
        magnitude = magnitude.with_null_nodes(mask.to_vec())?;
    }
    Ok(GradientField {
        components,
        magnitude,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SobolevReport {
    #[serde(with = "crate::ext::serde_ext")]
    pub u_norm: f64,
    pub u_in_lphi: bool,
    #[serde(with = "crate::ext::serde_ext")]
    pub gradient_norm: f64,
    pub gradient_in_lphi: bool,
    pub nac_fractions: Vec<f64>,
    pub acl_at_scale: bool,
    /// `‖u‖_φ + ‖|∇u|‖_φ` on the fine grid.
    #[serde(with = "crate::ext::serde_ext")]
    pub sobolev_norm: f64,
    /// Membership in `W^{1,φ}` established through the ACL route.
    pub in_w1phi_via_acl: bool,
}

/// Bundle `L^φ` memberships of `u` and `|∇u|`, the ACL verdict, and the
/// Orlicz–Sobolev norm.
pub fn sobolev_report(
    phi: &PhiFunction,
    coarse: &ScalarField,
    fine: &ScalarField,
    jump: &JumpOptions,
    norm: &NormOptions,
) -> Result<SobolevReport> {
    let acl = acl_check(coarse, fine, jump)?;
    let mu = lphi_membership(phi, fine, norm)?;
    let grad = gradient(fine)?;
    let mg = lphi_membership(phi, &grad.magnitude, norm)?;
    let acl_at_scale = acl.is_acl_at_scale();
    Ok(SobolevReport {
        u_norm: mu.norm,
        u_in_lphi: mu.member,
        gradient_norm: mg.norm,
        gradient_in_lphi: mg.member,
        nac_fractions: acl.axes.iter().map(|a| a.nac_fraction).collect(),
        acl_at_scale,
        sobolev_norm: mu.norm + mg.norm,
        in_w1phi_via_acl: acl_at_scale && mu.member && mg.member,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AccVerdict {
    VacuouslyAcc,
    AccCertifiedAtScale,
    AccViolatedAtScale,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccOptions {
    pub jump: JumpOptions,
    pub thresholds: DivergenceThresholds,
    /// Without a witness: the flagged family's norm modulus above this
    /// counts as positive.
    pub modulus_threshold: f64,
    pub modulus: ModulusOptions,
}

impl Default for AccOptions {
    fn default() -> Self {
        Self {
            jump: JumpOptions::default(),
            thresholds: DivergenceThresholds::default(),
            modulus_threshold: 0.1,
            modulus: ModulusOptions {
                iterations: 1500,
                ..ModulusOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccReport {
    /// Indices (into the family) of curves along which `u` has a
    /// persistent jump.
    pub flagged: Vec<usize>,
    pub curve_stats: Vec<JumpStats>,
    pub witness: Option<WitnessReport>,
    /// Norm-modulus estimate of the flagged family when no witness is given.
    pub flagged_modulus: Option<f64>,
    pub verdict: AccVerdict,
}

/// Flag curves along which `u` is not absolutely continuous at scale, then
/// decide whether the flagged family is exceptional.
pub fn acc_check(
    coarse: &ScalarField,
    fine: &ScalarField,
    family: &CurveFamily,
    witness: Option<&[ScalarField]>,
    phi: &PhiFunction,
    opts: &AccOptions,
) -> Result<AccReport> {
    if !fine.grid().is_refinement_of(coarse.grid()) {
        return input("fine field's grid is not the refinement of the coarse grid");
    }
    let step = 0.5 * coarse.grid().min_spacing();
    let mut flagged = Vec::new();
    let mut curve_stats = Vec::with_capacity(family.len());
    for (i, c) in family.curves.iter().enumerate() {
        let a = sample_along(coarse, c, step)?;
        let b = sample_along(fine, c, 0.5 * step)?;
        let s = classify_jump(&a, &b, &opts.jump);
        if s.verdict == SliceVerdict::Nac {
            flagged.push(i);
        }
        curve_stats.push(s);
    }
    if flagged.is_empty() {
        return Ok(AccReport {
            flagged,
            curve_stats,
            witness: None,
            flagged_modulus: None,
            verdict: AccVerdict::VacuouslyAcc,
        });
    }
    let sub = family.select(&flagged, format!("{} NAC", family.tag));
    if let Some(levels) = witness {
        let r = verify_exceptional_witness(levels, &sub, phi, &opts.thresholds)?;
        let verdict = if r.certified {
            AccVerdict::AccCertifiedAtScale
        } else {
            AccVerdict::AccViolatedAtScale
        };
        return Ok(AccReport {
            flagged,
            curve_stats,
            witness: Some(r),
            flagged_modulus: None,
            verdict,
        });
    }
    if !phi.is_convex() {
        return Ok(AccReport {
            flagged,
            curve_stats,
            witness: None,
            flagged_modulus: None,
            verdict: AccVerdict::Indeterminate,
        });
    }
    let m = estimate_modulus_norm(phi, &sub, coarse.grid(), &opts.modulus)?.estimate;
    let verdict = if m > opts.modulus_threshold {
        AccVerdict::AccViolatedAtScale
    } else {
        AccVerdict::Indeterminate
    };
    Ok(AccReport {
        flagged,
        curve_stats,
        witness: None,
        flagged_modulus: Some(m),
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FugledeOptions {
    pub norm: NormOptions,
    pub thresholds: DivergenceThresholds,
    /// Index `k` at which unflagged curve integrals must have decayed.
    pub decay_k: usize,
    pub decay_threshold: f64,
}

impl Default for FugledeOptions {
    fn default() -> Self {
        Self {
            norm: NormOptions::default(),
            thresholds: DivergenceThresholds::default(),
            decay_k: 10,
            decay_threshold: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyCheck {
    pub j: usize,
    /// `‖w_K - w_j‖_φ`.
    pub tail_norm: f64,
    /// `2^-j`.
    pub bound: f64,
    pub holds: bool,
}

/// `w/m` admissibility certificate for the flagged family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityCertificate {
    /// Largest integer `m` with `∫_γ w ds ≥ m` on every flagged curve.
    pub m: f64,
    #[serde(with = "crate::ext::serde_ext")]
    pub min_integral: f64,
    pub w_norm: f64,
    /// `‖w/m‖_φ = ‖w‖_φ / m`, an upper bound for the flagged family's modulus.
    pub modulus_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FugledeReport {
    /// `‖u_i‖_φ` for every sequence member (`i` counted from 1).
    pub norms: Vec<f64>,
    /// Selected `i_k` (counted from 1): the first index past `i_{k-1}` with
    /// `‖u_i‖ ≤ 2^-k`.
    pub selected: Vec<usize>,
    /// The selection stopped before the end of the sequence ran out of
    /// candidates for the next bound.
    pub exhausted: bool,
    pub cauchy: Vec<CauchyCheck>,
    /// Max over unflagged curves of `∫_γ v_k ds`, `k = 1..K`.
    pub unflagged_max_integral: Vec<f64>,
    pub decay_ok: bool,
    /// Family indices flagged by the divergence of `∫_γ w_j ds`.
    pub flagged: Vec<usize>,
    pub certificate: Option<AdmissibilityCertificate>,
    /// Divergence check of `w_j` on the flagged family, levels
    /// `j = ⌈K/4⌉` and `K`.
    pub witness: Option<WitnessReport>,
}

/// Greedy geometric subsequence, partial-sum majorant and exceptional
/// sub-family of a sequence tending to zero in `L^φ`.
pub fn fuglede_subsequence(
    phi: &PhiFunction,
    seq: &[ScalarField],
    family: &CurveFamily,
    opts: &FugledeOptions,
) -> Result<FugledeReport> {
    if seq.is_empty() {
        return input("empty sequence");
    }
    if seq.iter().any(|u| u.kind() != FieldKind::Nonneg) {
        return input("sequence members must be nonnegative");
    }
    let grid: &BoxGrid = seq[0].grid();
    if seq.iter().any(|u| u.grid() != grid) {
        return input("sequence members must share a grid");
    }
    let norms = seq
        .iter()
        .map(|u| luxemburg_norm(phi, u, &opts.norm).map(|r| r.value))
        .collect::<Result<Vec<f64>>>()?;
    let mut selected = Vec::new();
    let mut pos = 0;
    let mut exhausted = false;
    loop {
        let bound = 0.5f64.powi(selected.len() as i32 + 1);
        match (pos..seq.len()).find(|&i| norms[i] <= bound) {
            Some(i) => {
                selected.push(i + 1);
                pos = i + 1;
                if pos >= seq.len() {
                    break;
                }
            }
            None => {
                exhausted = true;
                break;
            }
        }
    }
    let vs: Vec<&ScalarField> = selected.iter().map(|&i| &seq[i - 1]).collect();
    let kk = vs.len();
    if kk == 0 {
        return Ok(FugledeReport {
            norms,
            selected,
            exhausted,
            cauchy: Vec::new(),
            unflagged_max_integral: Vec::new(),
            decay_ok: false,
            flagged: Vec::new(),
            certificate: None,
            witness: None,
        });
    }
    // Partial sums w_1..w_K.
    let mut partial: Vec<ScalarField> = Vec::with_capacity(kk);
    for v in &vs {
        let next = match partial.last() {
            Some(w) => w.add(v)?,
            None => (*v).clone(),
        };
        partial.push(next);
    }
    // Tails w_K - w_j = v_{j+1} + ... + v_K, for j = 0..K-1.
    let mut cauchy = Vec::with_capacity(kk);
    let mut tail: Option<ScalarField> = None;
    for j in (0..kk).rev() {
        tail = Some(match tail {
            Some(t) => t.add(vs[j])?,
            None => vs[j].clone(),
        });
        let t = tail.as_ref().expect("set above");
        let tail_norm = luxemburg_norm(phi, t, &opts.norm)?.value;
        let bound = 0.5f64.powi(j as i32);
        cauchy.push(CauchyCheck {
            j,
            tail_norm,
            bound,
            holds: tail_norm <= bound * (1.0 + 1e-9),
        });
    }
    cauchy.reverse();

    let step = 0.5 * grid.min_spacing();
    let early = kk.div_ceil(4).max(1);
    let mut flagged = Vec::new();
    let mut per_curve: Vec<Vec<f64>> = Vec::with_capacity(family.len());
    for (ci, c) in family.curves.iter().enumerate() {
        let ints = vs
            .iter()
            .map(|v| curve_integral(v, c, step))
            .collect::<Result<Vec<f64>>>()?;
        let mut cum = 0.0;
        let mut w_early = 0.0;
        for (k, x) in ints.iter().enumerate() {
            cum += x;
            if k + 1 == early {
                w_early = cum;
            }
        }
        if kk >= 2 && is_divergent(w_early, cum, &opts.thresholds) {
            flagged.push(ci);
        }
        per_curve.push(ints);
    }
    let unflagged_max_integral: Vec<f64> = (0..kk)
        .map(|k| {
            per_curve
                .iter()
                .enumerate()
                .filter(|(ci, _)| !flagged.contains(ci))
                .map(|(_, ints)| ints[k])
                .fold(0.0, f64::max)
        })
        .collect();
    let decay_ok =
        kk >= opts.decay_k && unflagged_max_integral[opts.decay_k - 1] <= opts.decay_threshold;

    let (certificate, witness) = if flagged.is_empty() {
        (None, None)
    } else {
        let sub = family.select(&flagged, format!("{} flagged", family.tag));
        let w = partial.last().expect("K >= 1");
        let min_integral = sub
            .curves
            .iter()
            .map(|c| curve_integral(w, c, step))
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let w_norm = luxemburg_norm(phi, w, &opts.norm)?.value;
        let m = if min_integral.is_infinite() {
            f64::MAX
        } else {
            min_integral.floor()
        };
        let cert = AdmissibilityCertificate {
            m,
            min_integral,
            w_norm,
            modulus_bound: w_norm / m,
        };
        let levels = vec![partial[early - 1].clone(), w.clone()];
        // Both levels live on one grid; the step halving is harmless.
        let r = verify_exceptional_witness(&levels, &sub, phi, &opts.thresholds)?;
        (Some(cert), Some(r))
    };
    Ok(FugledeReport {
        norms,
        selected,
        exhausted,
        cauchy,
        unflagged_max_integral,
        decay_ok,
        flagged,
        certificate,
        witness,
    })
}

/// Pointwise infimum of the sequence from `tail_start` on, the finite
/// surrogate of `liminf u_i`.
pub fn liminf_representative(seq: &[ScalarField], tail_start: usize) -> Result<ScalarField> {
    let tail = seq
        .get(tail_start..)
        .filter(|t| !t.is_empty())
        .ok_or_else(|| {
            crate::Error::Input(format!(
                "tail start {tail_start} leaves no sequence members"
            ))
        })?;
    let g = tail[0].grid();
    if tail.iter().any(|u| u.grid() != g) {
        return input("sequence members must share a grid");
    }
    let vals = (0..g.len())
        .map(|i| {
            tail.iter()
                .map(|u| u.values()[i])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let kind = if tail.iter().all(|u| u.kind() == FieldKind::Nonneg) {
        FieldKind::Nonneg
    } else {
        FieldKind::Signed
    };
    ScalarField::new(g.clone(), vals, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::segment_family;
    use crate::generate::FieldSpec;
    use crate::grid::BoxDomain;

    fn pair(spec: &FieldSpec, g: &BoxGrid) -> (ScalarField, ScalarField) {
        (spec.sample(g).unwrap(), spec.sample(&g.refined()).unwrap())
    }

    fn square() -> BoxGrid {
        BoxGrid::new(vec![-1.0, -1.0], vec![1.0, 1.0], vec![33, 33]).unwrap()
    }

    #[test]
    fn step_function_fails_acl_across_the_jump_only() {
        let (c, f) = pair(
            &FieldSpec::Step {
                axis: 0,
                center: 0.0,
                below: 0.0,
                at: 1.0,
                above: 2.0,
            },
            &square(),
        );
        let r = acl_check(&c, &f, &JumpOptions::default()).unwrap();
        assert_eq!(r.axes[0].nac, r.axes[0].slices);
        assert_eq!(r.axes[1].ac, r.axes[1].slices);
        let jump = r.axes[0].failing[0].stats.fine_two_step;
        assert!((jump - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lipschitz_fields_are_acl() {
        for spec in [
            FieldSpec::Affine {
                offset: 0.0,
                gradient: vec![1.0, 0.0],
            },
            FieldSpec::Abs {
                axis: 0,
                center: 0.0,
            },
        ] {
            let (c, f) = pair(&spec, &square());
            assert!(
                acl_check(&c, &f, &JumpOptions::default())
                    .unwrap()
                    .is_acl_at_scale(),
                "{spec:?}"
            );
        }
    }

    #[test]
    fn acl_rejects_mismatched_resolutions() {
        let g = square();
        let c = ScalarField::zeros(g.clone());
        assert!(acl_check(&c, &c, &JumpOptions::default()).is_err());
    }

    #[test]
    fn gradient_examples() {
        let g = BoxGrid::unit_square(17);
        let y = ScalarField::from_fn(g.clone(), FieldKind::Nonneg, |x| x[0]).unwrap();
        let gr = gradient(&y).unwrap();
        assert!(gr.components[0]
            .values()
            .iter()
            .all(|v| (v - 1.0).abs() < 1e-12));
        assert!(gr.components[1].values().iter().all(|v| v.abs() < 1e-12));
        let q = ScalarField::from_fn(g.clone(), FieldKind::Nonneg, |x| x[0] * x[0] + x[1] * x[1])
            .unwrap();
        let gr = gradient(&q).unwrap();
        for i in 0..g.len() {
            let x = g.node(i);
            let exact = 2.0 * (x[0] * x[0] + x[1] * x[1]).sqrt();
            assert!((gr.magnitude.values()[i] - exact).abs() < 1e-10);
        }
        let c = ScalarField::constant(g, 3.0).unwrap();
        assert!(gradient(&c)
            .unwrap()
            .magnitude
            .values()
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn smooth_field_is_vacuously_acc() {
        let g = square();
        let (c, f) = pair(&FieldSpec::Product { scale: 1.0 }, &g);
        let fam = segment_family(1, 9, g.domain()).unwrap();
        let phi = PhiFunction::power(2.0, g.domain().clone()).unwrap();
        let r = acc_check(&c, &f, &fam, None, &phi, &AccOptions::default()).unwrap();
        assert_eq!(r.verdict, AccVerdict::VacuouslyAcc);
    }

    #[test]
    fn liminf_takes_tail_minimum() {
        let g = BoxGrid::unit_square(3);
        let seq: Vec<ScalarField> = [3.0, 1.0, 2.0]
            .iter()
            .map(|&c| ScalarField::constant(g.clone(), c).unwrap())
            .collect();
        assert!(liminf_representative(&seq, 1)
            .unwrap()
            .values()
            .iter()
            .all(|v| *v == 1.0));
        assert!(liminf_representative(&seq, 3).is_err());
    }

    #[test]
    fn fuglede_on_constants() {
        let g = BoxGrid::unit_square(9);
        let d = BoxDomain::unit(2);
        let phi = PhiFunction::power(2.0, d.clone()).unwrap();
        let seq: Vec<ScalarField> = (1..=64)
            .map(|i| ScalarField::constant(g.clone(), 1.0 / i as f64).unwrap())
            .collect();
        let fam = segment_family(1, 9, &d).unwrap();
        let r = fuglede_subsequence(&phi, &seq, &fam, &FugledeOptions::default()).unwrap();
        assert_eq!(r.selected, vec![2, 4, 8, 16, 32, 64]);
        assert!(r.flagged.is_empty() && r.cauchy.iter().all(|c| c.holds));
    }
}
