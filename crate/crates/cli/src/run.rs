//! Stage execution, expectations and report emission.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use orlicz_core::acsob::{
    acc_check, acl_check, fuglede_subsequence, gradient, sobolev_report, AccOptions,
    FugledeOptions, JumpOptions,
};
use orlicz_core::curve::{curve_integral, curves_meeting_set};
use orlicz_core::field::{
    holder_check, lphi_membership, luxemburg_norm, modular, norm_modular_bounds, HolderOptions,
};
use orlicz_core::generate::FieldSpec;
use orlicz_core::io::{read_curves, read_field, write_curves, write_field};
use orlicz_core::modulus::{
    estimate_modulus_modular, estimate_modulus_norm, modulus_properties_suite,
    verify_exceptional_witness, DivergenceThresholds, NestedPair, WitnessedFamily,
};
use orlicz_core::phi::{
    check_condition, check_equivalence, conjugate_phi, left_inverse, validate_phi, Witness,
};
use orlicz_core::{
    BoxGrid, Curve, CurveFamily, FieldKind, ModulusOptions, NormOptions, PhiFunction, SampleSpec,
    ScalarField,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::scenario::{
    Diag, Expect, FamilySource, FieldSource, ModulusKind, Op, Scenario, SequenceSpec, Stage, Study,
};

#[derive(Debug, Clone, Serialize)]
pub struct ExpectationOutcome {
    pub metric: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub index: usize,
    pub line: usize,
    pub op: String,
    pub label: String,
    pub result: Value,
    pub expectations: Vec<ExpectationOutcome>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: String,
    pub description: String,
    pub stages: Vec<StageReport>,
    /// Every missed expectation, as `stage <i> (<label>): <detail>`.
    pub failures: Vec<String>,
    pub passed: bool,
}

struct Context<'a> {
    sc: &'a Scenario,
    fields: RefCell<BTreeMap<String, ScalarField>>,
    families: RefCell<BTreeMap<String, CurveFamily>>,
    resolving: RefCell<BTreeSet<String>>,
}

fn core_err(line: usize) -> impl Fn(orlicz_core::Error) -> Diag {
    move |e| Diag::at(line, e.to_string())
}

pub fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

impl<'a> Context<'a> {
    fn new(sc: &'a Scenario) -> Self {
        Self {
            sc,
            fields: RefCell::default(),
            families: RefCell::default(),
            resolving: RefCell::default(),
        }
    }

    fn path(&self, p: &Path) -> PathBuf {
        self.sc.base.join(p)
    }

    fn grid(&self, line: usize, level: usize) -> Result<BoxGrid, Diag> {
        let mut g = self
            .sc
            .grid
            .clone()
            .ok_or_else(|| Diag::at(line, "this stage needs a [grid]"))?;
        for _ in 0..level {
            g = g.refined();
        }
        Ok(g)
    }

    fn phi(&self, stage: &Stage) -> Result<PhiFunction, Diag> {
        match &stage.phi {
            Some(name) => self.named_phi(stage.line, name),
            None => self.sc.phi.as_ref().map(|(_, p)| p.clone()).ok_or_else(|| {
                Diag::at(
                    stage.line,
                    "this stage needs an integrand: add [phi] or set phi = \"<name>\"",
                )
            }),
        }
    }

    fn named_phi(&self, line: usize, name: &str) -> Result<PhiFunction, Diag> {
        self.sc
            .phis
            .get(name)
            .map(|(_, p)| p.clone())
            .ok_or_else(|| Diag::at(line, format!("undefined integrand {name:?}")))
    }

    fn field(&self, name: &str) -> Result<ScalarField, Diag> {
        if let Some(f) = self.fields.borrow().get(name) {
            return Ok(f.clone());
        }
        let (line, src) = &self.sc.fields[name];
        let f = match src {
            FieldSource::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Diag::at(*line, format!("cannot read {}: {e}", path.display())))?;
                read_field(&text)
                    .map_err(|e| Diag::at(*line, format!("{}: {e}", path.display())))?
            }
            FieldSource::Generated { spec, level } => spec
                .sample(&self.grid(*line, *level)?)
                .map_err(core_err(*line))?,
        };
        self.fields.borrow_mut().insert(name.to_string(), f.clone());
        Ok(f)
    }

    fn fields(&self, names: &[String]) -> Result<Vec<ScalarField>, Diag> {
        names.iter().map(|n| self.field(n)).collect()
    }

    fn family(&self, name: &str) -> Result<CurveFamily, Diag> {
        if let Some(f) = self.families.borrow().get(name) {
            return Ok(f.clone());
        }
        let (line, src) = &self.sc.families[name];
        let line = *line;
        if !self.resolving.borrow_mut().insert(name.to_string()) {
            return Err(Diag::at(
                line,
                format!("curve family {name:?} refers to itself"),
            ));
        }
        let mut fam = match src {
            FamilySource::File(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Diag::at(line, format!("cannot read {}: {e}", path.display())))?;
                read_curves(&text, name)
                    .map_err(|e| Diag::at(line, format!("{}: {e}", path.display())))?
            }
            FamilySource::Generated(spec) => {
                let d = self
                    .sc
                    .domain
                    .as_ref()
                    .ok_or_else(|| Diag::at(line, "needs a [domain]"))?;
                spec.build(d).map_err(core_err(line))?
            }
            FamilySource::Segment { from, to } => CurveFamily::new(
                vec![Curve::segment(from.clone(), to.clone()).map_err(core_err(line))?],
                name,
            ),
            FamilySource::Meeting {
                family,
                indicator,
                step,
            } => {
                let fam = self.family(family)?;
                let ind = self.field(indicator)?;
                let step = step.unwrap_or(0.25 * ind.grid().min_spacing());
                curves_meeting_set(&fam, &ind, step).map_err(core_err(line))?
            }
            FamilySource::Select { family, indices } => {
                let fam = self.family(family)?;
                if let Some(bad) = indices.iter().find(|i| **i >= fam.len()) {
                    return Err(Diag::at(
                        line,
                        format!(
                            "index {bad} out of range for {family:?} ({} curves)",
                            fam.len()
                        ),
                    ));
                }
                fam.select(indices, name)
            }
            FamilySource::Join { families } => {
                let mut out = CurveFamily::empty();
                for f in families {
                    out = out.union(&self.family(f)?);
                }
                out
            }
        };
        fam.tag = name.to_string();
        self.resolving.borrow_mut().remove(name);
        self.families
            .borrow_mut()
            .insert(name.to_string(), fam.clone());
        Ok(fam)
    }

    fn samples(&self, phi: &PhiFunction, x_per_axis: Option<usize>) -> SampleSpec {
        let mut s = SampleSpec::for_phi(phi);
        if let Some(n) = x_per_axis {
            s.x_per_axis = n;
        }
        s
    }

    fn run_stage(&self, stage: &Stage) -> Result<Value, Diag> {
        let l = stage.line;
        let err = core_err(l);
        let nopts = NormOptions::default();
        Ok(match &stage.op {
            Op::Modular { field } => {
                json!({ "value": ext(modular(&self.phi(stage)?, &self.field(field)?).map_err(err)?) })
            }
            Op::Norm { field, tol } => {
                let o = tol.map(NormOptions::with_tol).unwrap_or_default();
                let r = luxemburg_norm(&self.phi(stage)?, &self.field(field)?, &o).map_err(err)?;
                json!({
                    "value": ext(r.value),
                    "lambda_lo": r.lambda_lo,
                    "lambda_hi": ext(r.lambda_hi),
                    "modular_at_hi": ext(r.modular_at_hi),
                    "iterations": r.iterations,
                })
            }
            Op::NormModular { field } => {
                let r = norm_modular_bounds(&self.phi(stage)?, &self.field(field)?, &nopts)
                    .map_err(err)?;
                let mut v = to_json(&r);
                v["holds"] = json!(r.holds());
                v
            }
            Op::Membership { field } => {
                let r =
                    lphi_membership(&self.phi(stage)?, &self.field(field)?, &nopts).map_err(err)?;
                to_json(&r)
            }
            Op::LpCrossCheck { fields, p } => {
                let phi = PhiFunction::power(
                    *p,
                    self.sc
                        .domain
                        .clone()
                        .ok_or_else(|| Diag::at(l, "needs a [domain]"))?,
                )
                .map_err(&err)?;
                let mut rows = Vec::new();
                let mut worst = 0.0f64;
                for name in fields {
                    let f = self.field(name)?;
                    let n = luxemburg_norm(&phi, &f, &nopts).map_err(&err)?.value;
                    let w = f.quadrature_weights();
                    let lp = w
                        .iter()
                        .zip(f.values())
                        .map(|(w, v)| w * v.abs().powf(*p))
                        .sum::<f64>()
                        .powf(1.0 / p);
                    worst = worst.max((n - lp).abs());
                    rows.push(json!({ "field": name, "norm": n, "lp": lp }));
                }
                json!({ "p": p, "cases": rows.len(), "max_abs_diff": worst, "rows": rows })
            }
            Op::LeftInverse { x, tau, tol } => {
                let v =
                    left_inverse(&self.phi(stage)?, x, *tau, tol.unwrap_or(1e-10)).map_err(err)?;
                json!({ "value": ext(v) })
            }
            Op::Conjugate { x, s, t_max } => {
                let v =
                    conjugate_phi(&self.phi(stage)?, x, *s, t_max.unwrap_or(1e4)).map_err(err)?;
                json!({ "value": ext(v) })
            }
            Op::Condition {
                condition,
                x_per_axis,
            } => {
                let phi = self.phi(stage)?;
                let r = check_condition(&phi, *condition, &self.samples(&phi, *x_per_axis))
                    .map_err(err)?;
                let mut v = to_json(&r);
                if let Witness::Refutations { refutations } = &r.witness {
                    v["refutation_count"] = json!(refutations.len());
                    let candidates = self.samples(&phi, *x_per_axis).beta_candidates().len();
                    v["beta_candidates"] = json!(candidates);
                    v["refuted_everywhere"] = json!(refutations.len() == candidates);
                    v["refutations_verified"] = json!(refutations
                        .iter()
                        .all(|w| phi.value(&w.x, w.beta) == w.value && w.value < 1.0));
                }
                if let Witness::Beta { beta } = r.witness {
                    v["beta"] = json!(beta);
                }
                v
            }
            Op::Equivalence {
                other,
                l: c,
                x_per_axis,
            } => {
                let phi = self.phi(stage)?;
                let psi = self.named_phi(l, other)?;
                to_json(
                    &check_equivalence(&phi, &psi, *c, &self.samples(&phi, *x_per_axis))
                        .map_err(err)?,
                )
            }
            Op::Validate { x_per_axis } => {
                let phi = self.phi(stage)?;
                validate_phi(&phi, &self.samples(&phi, *x_per_axis)).map_err(err)?;
                json!({ "valid": true })
            }
            Op::Holder { f, g, t_max } => {
                let o = HolderOptions {
                    conjugate_t_max: t_max.unwrap_or(1e4),
                    ..HolderOptions::default()
                };
                let r = holder_check(&self.phi(stage)?, &self.field(f)?, &self.field(g)?, &o)
                    .map_err(err)?;
                let mut v = to_json(&r);
                v["gap"] = json!(r.rhs - r.lhs);
                v
            }
            Op::HolderSuite { fields, phis } => {
                let fs = self.fields(fields)?;
                let o = HolderOptions::default();
                let (mut triples, mut failures, mut worst) = (0usize, 0usize, 0.0f64);
                for name in phis {
                    let phi = self.named_phi(l, name)?;
                    for i in 0..fs.len() {
                        let r = holder_check(&phi, &fs[i], &fs[(i + 1) % fs.len()], &o)
                            .map_err(&err)?;
                        triples += 1;
                        failures += usize::from(!r.pass);
                        if r.rhs > 0.0 {
                            worst = worst.max(r.lhs / r.rhs);
                        }
                    }
                }
                json!({ "triples": triples, "failures": failures, "max_ratio": worst })
            }
            Op::Modulus {
                family,
                kind,
                iterations,
                level,
            } => {
                let phi = self.phi(stage)?;
                let fam = self.family(family)?;
                let grid = self.grid(l, *level)?;
                let o = modulus_options(*iterations);
                let r = match kind {
                    ModulusKind::Modular => estimate_modulus_modular(&phi, &fam, &grid, &o),
                    ModulusKind::Norm => estimate_modulus_norm(&phi, &fam, &grid, &o),
                }
                .map_err(err)?;
                let mut v = to_json(&r);
                v["min_residual"] = json!(r.min_residual());
                v["curves"] = json!(fam.len());
                v
            }
            Op::ModulusConsistency {
                family,
                p,
                iterations,
            } => {
                let d = self
                    .sc
                    .domain
                    .clone()
                    .ok_or_else(|| Diag::at(l, "needs a [domain]"))?;
                let phi = PhiFunction::power(*p, d).map_err(&err)?;
                let fam = self.family(family)?;
                let grid = self.grid(l, 0)?;
                let o = modulus_options(*iterations);
                let m = estimate_modulus_modular(&phi, &fam, &grid, &o)
                    .map_err(&err)?
                    .estimate;
                let n = estimate_modulus_norm(&phi, &fam, &grid, &o)
                    .map_err(&err)?
                    .estimate;
                json!({ "p": p, "modular": m, "norm": n, "norm_pow": n.powf(*p), "diff": (m - n.powf(*p)).abs() })
            }
            Op::Witness { family, levels } => {
                let r = verify_exceptional_witness(
                    &self.fields(levels)?,
                    &self.family(family)?,
                    &self.phi(stage)?,
                    &DivergenceThresholds::default(),
                )
                .map_err(err)?;
                let mut v = to_json(&r);
                v["curve_count"] = json!(r.curves.len());
                v
            }
            Op::Properties {
                pairs,
                unions,
                witnesses,
                witness_phi,
                iterations,
                rel_tol,
                abs_tol,
            } => {
                let phi = self.phi(stage)?;
                let o = modulus_options(*iterations);
                let np = pairs
                    .iter()
                    .map(|[a, b]| {
                        Ok(NestedPair {
                            small: self.family(a)?,
                            large: self.family(b)?,
                        })
                    })
                    .collect::<Result<Vec<_>, Diag>>()?;
                let wf = |name: &String| -> Result<WitnessedFamily, Diag> {
                    Ok(WitnessedFamily {
                        family: self.family(name)?,
                        witness: self.fields(&witnesses[name])?,
                    })
                };
                let nu = unions
                    .iter()
                    .map(|[a, b]| Ok((wf(a)?, wf(b)?)))
                    .collect::<Result<Vec<_>, Diag>>()?;
                let wphi = match witness_phi {
                    Some(n) => self.named_phi(l, n)?,
                    None => phi.clone(),
                };
                let r = modulus_properties_suite(
                    &phi,
                    &np,
                    &self.grid(l, 0)?,
                    &o,
                    &nu,
                    &wphi,
                    &DivergenceThresholds::default(),
                    (rel_tol.unwrap_or(o.outer_rel_tol), abs_tol.unwrap_or(1e-3)),
                )
                .map_err(err)?;
                let mut v = to_json(&r);
                v["holds"] = json!(r.holds());
                v["monotone_pairs"] = json!(r.monotonicity.iter().filter(|m| m.holds).count());
                v["certified_unions"] =
                    json!(r.unions.iter().filter(|u| u.union_certified).count());
                v
            }
            Op::Acl { coarse, fine } => {
                let r = acl_check(
                    &self.field(coarse)?,
                    &self.field(fine)?,
                    &JumpOptions::default(),
                )
                .map_err(err)?;
                acl_summary(&r)
            }
            Op::Acc {
                coarse,
                fine,
                family,
                witness,
            } => {
                let levels = witness.as_ref().map(|w| self.fields(w)).transpose()?;
                let r = acc_check(
                    &self.field(coarse)?,
                    &self.field(fine)?,
                    &self.family(family)?,
                    levels.as_deref(),
                    &self.phi(stage)?,
                    &AccOptions::default(),
                )
                .map_err(err)?;
                json!({
                    "verdict": to_json(&r.verdict),
                    "flagged": r.flagged,
                    "flagged_count": r.flagged.len(),
                    "flagged_modulus": r.flagged_modulus,
                    "witness": r.witness.as_ref().map(|w| json!({ "norm": ext(w.norm), "certified": w.certified })),
                })
            }
            Op::Sobolev { coarse, fine } => {
                let r = sobolev_report(
                    &self.phi(stage)?,
                    &self.field(coarse)?,
                    &self.field(fine)?,
                    &JumpOptions::default(),
                    &nopts,
                )
                .map_err(err)?;
                to_json(&r)
            }
            Op::Fuglede {
                sequence,
                family,
                level,
            } => {
                let grid = self.grid(l, *level)?;
                let seq = build_sequence(sequence, &grid).map_err(&err)?;
                let r = fuglede_subsequence(
                    &self.phi(stage)?,
                    &seq,
                    &self.family(family)?,
                    &FugledeOptions::default(),
                )
                .map_err(err)?;
                let mut v = to_json(&r);
                v["selected_count"] = json!(r.selected.len());
                v["geometric"] = json!(r
                    .selected
                    .iter()
                    .enumerate()
                    .all(|(k, &i)| r.norms[i - 1] <= 0.5f64.powi(k as i32 + 1)));
                v["late_unflagged_max"] = json!(r
                    .unflagged_max_integral
                    .iter()
                    .skip(9)
                    .fold(0.0f64, |a, b| a.max(*b)));
                v
            }
            Op::Convergence { study, sizes, data } => {
                let (hs, errors) = convergence(*study, sizes).map_err(&err)?;
                let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
                let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
                if let Some(p) = data {
                    let mut s = String::from("# size h error\n");
                    for ((m, h), e) in sizes.iter().zip(&hs).zip(&errors) {
                        s.push_str(&format!("{m} {h:e} {e:e}\n"));
                    }
                    write_file(&self.path(p), &s, l)?;
                }
                json!({ "sizes": sizes, "h": hs, "errors": errors, "orders": orders, "min_order": min_order })
            }
            Op::WriteField { field, path } => {
                let p = self.path(path);
                write_file(&p, &write_field(&self.field(field)?), l)?;
                json!({ "path": p.display().to_string() })
            }
            Op::WriteCurves { family, path } => {
                let p = self.path(path);
                let fam = self.family(family)?;
                write_file(&p, &write_curves(&fam.curves), l)?;
                json!({ "path": p.display().to_string(), "curves": fam.len() })
            }
        })
    }
}

/// JSON-safe extended real: `±∞` become the strings `"inf"`/`"-inf"`.
pub fn ext(v: f64) -> Value {
    if v == f64::INFINITY {
        json!("inf")
    } else if v == f64::NEG_INFINITY {
        json!("-inf")
    } else {
        json!(v)
    }
}

fn modulus_options(iterations: Option<usize>) -> ModulusOptions {
    let mut o = ModulusOptions::default();
    if let Some(n) = iterations {
        o.iterations = n;
    }
    o
}

fn write_file(path: &Path, text: &str, line: usize) -> Result<(), Diag> {
    std::fs::write(path, text)
        .map_err(|e| Diag::at(line, format!("cannot write {}: {e}", path.display())))
}

pub fn acl_summary(r: &orlicz_core::acsob::AcReport) -> Value {
    let axes: Vec<Value> = r
        .axes
        .iter()
        .map(|a| {
            json!({
                "axis": a.axis,
                "slices": a.slices,
                "ac": a.ac,
                "nac": a.nac,
                "indeterminate": a.indeterminate,
                "nac_fraction": a.nac_fraction,
                "ac_fraction": a.ac as f64 / a.slices.max(1) as f64,
            })
        })
        .collect();
    json!({ "acl_at_scale": r.is_acl_at_scale(), "axes": axes })
}

fn build_sequence(spec: &SequenceSpec, grid: &BoxGrid) -> orlicz_core::Result<Vec<ScalarField>> {
    match spec {
        SequenceSpec::ShrinkingStrip {
            axis,
            center,
            count,
            width_scale,
            width_power,
            height_power,
            null_core,
        } => (1..=*count)
            .map(|i| {
                let i = i as f64;
                FieldSpec::Strip {
                    axis: *axis,
                    center: *center,
                    half_width: width_scale * i.powf(-width_power),
                    height: i.powf(*height_power),
                    null_core: *null_core,
                }
                .sample(grid)
            })
            .collect(),
        SequenceSpec::DecayingConstant { count } => (1..=*count)
            .map(|i| ScalarField::constant(grid.clone(), 1.0 / i as f64))
            .collect(),
    }
}

/// Errors of the fixed smooth test problems on unit squares of the given
/// sizes, with the grid spacings.
fn convergence(study: Study, sizes: &[usize]) -> orlicz_core::Result<(Vec<f64>, Vec<f64>)> {
    let mut hs = Vec::new();
    let mut errors = Vec::new();
    let e2 = std::f64::consts::E.powi(2);
    let (a, b) = ([0.1f64, 0.2], [0.9f64, 0.7]);
    for &m in sizes {
        let grid = BoxGrid::unit_square(m);
        hs.push(grid.min_spacing());
        let exp_sum =
            ScalarField::from_fn(grid.clone(), FieldKind::Nonneg, |x| (x[0] + x[1]).exp())?;
        let err = match study {
            Study::Quadrature => {
                let phi = PhiFunction::power(2.0, grid.domain().clone())?;
                (modular(&phi, &exp_sum)? - ((e2 - 1.0) / 2.0).powi(2)).abs()
            }
            Study::CurveIntegral => {
                let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
                let slope = (b[0] - a[0] + b[1] - a[1]) / len;
                let exact = ((b[0] + b[1]).exp() - (a[0] + a[1]).exp()) / slope;
                let gamma = Curve::segment(a.to_vec(), b.to_vec())?;
                (curve_integral(&exp_sum, &gamma, 0.5 * grid.min_spacing())? - exact).abs()
            }
            Study::Gradient => {
                let u = ScalarField::from_fn(grid.clone(), FieldKind::Signed, |x| {
                    x[0].sin() * (2.0 * x[1]).exp()
                })?;
                let g = gradient(&u)?;
                let mut worst = 0.0f64;
                for i in 0..grid.len() {
                    let x = grid.node(i);
                    let dx = x[0].cos() * (2.0 * x[1]).exp();
                    let dy = 2.0 * x[0].sin() * (2.0 * x[1]).exp();
                    worst = worst
                        .max((g.components[0].values()[i] - dx).abs())
                        .max((g.components[1].values()[i] - dy).abs());
                }
                worst
            }
        };
        errors.push(err);
    }
    Ok((hs, errors))
}

fn lookup<'v>(v: &'v Value, path: &str) -> Option<&'v Value> {
    path.split('.').try_fold(v, |cur, key| match cur {
        Value::Object(m) => m.get(key),
        Value::Array(a) => key.parse::<usize>().ok().and_then(|i| a.get(i)),
        _ => None,
    })
}

fn as_number(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) if s == "inf" => Some(f64::INFINITY),
        Value::String(s) if s == "-inf" => Some(f64::NEG_INFINITY),
        _ => None,
    }
}

fn check(e: &Expect, result: &Value) -> ExpectationOutcome {
    let outcome = |ok: bool, detail: String| ExpectationOutcome {
        metric: e.metric.clone(),
        ok,
        detail,
    };
    let Some(v) = lookup(result, &e.metric) else {
        return outcome(false, format!("{} is not in the result", e.metric));
    };
    let mut problems = Vec::new();
    if let Some(want) = &e.equals {
        let want = serde_json::to_value(want).unwrap_or(Value::Null);
        let same = match (as_number(v), as_number(&want)) {
            (Some(a), Some(b)) => a == b,
            _ => *v == want,
        };
        if !same {
            problems.push(format!("expected {want}"));
        }
    }
    let needs_number = e.eq.is_some() || e.min.is_some() || e.max.is_some();
    if needs_number {
        match as_number(v) {
            None => problems.push("not a number".into()),
            Some(x) => {
                if let Some(t) = e.eq {
                    if !((x - t).abs() <= e.tol || x == t) {
                        problems.push(format!("expected {t} ± {}", e.tol));
                    }
                }
                if let Some(m) = e.min {
                    if !(x >= m) {
                        problems.push(format!("expected >= {m}"));
                    }
                }
                if let Some(m) = e.max {
                    if !(x <= m) {
                        problems.push(format!("expected <= {m}"));
                    }
                }
            }
        }
    }
    if problems.is_empty() {
        outcome(true, format!("{} = {v}", e.metric))
    } else {
        outcome(
            false,
            format!("{} = {v}: {}", e.metric, problems.join(", ")),
        )
    }
}

fn op_name(op: &Op) -> String {
    let v = format!("{op:?}");
    let head = v.split([' ', '{', '(']).next().unwrap_or("");
    let mut out = String::new();
    for (i, c) in head.chars().enumerate() {
        if c.is_uppercase() {
            if i > 0 {
                out.push('_');
            }
            out.extend(c.to_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

/// Run every stage in order. Input problems abort the run; missed
/// expectations are collected.
pub fn run(sc: &Scenario) -> Result<Report, Diag> {
    let cx = Context::new(sc);
    let mut stages = Vec::new();
    let mut failures = Vec::new();
    for (index, stage) in sc.stages.iter().enumerate() {
        let result = cx.run_stage(stage)?;
        let op = op_name(&stage.op);
        let label = stage.label.clone().unwrap_or_else(|| op.clone());
        let expectations: Vec<ExpectationOutcome> =
            stage.expect.iter().map(|e| check(e, &result)).collect();
        for e in expectations.iter().filter(|e| !e.ok) {
            failures.push(format!(
                "stage {} ({label}, line {}): {}",
                index + 1,
                stage.line,
                e.detail
            ));
        }
        stages.push(StageReport {
            index: index + 1,
            line: stage.line,
            op,
            label,
            result,
            expectations,
        });
    }
    Ok(Report {
        scenario: sc.name.clone(),
        description: sc.description.clone(),
        passed: failures.is_empty(),
        stages,
        failures,
    })
}

fn numeric_leaves(prefix: &str, v: &Value, out: &mut Vec<(String, f64)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let p = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                numeric_leaves(&p, x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                numeric_leaves(&format!("{prefix}.{i}"), x, out);
            }
        }
        Value::Bool(b) => out.push((prefix.to_string(), f64::from(u8::from(*b)))),
        other => {
            if let Some(x) = as_number(other) {
                out.push((prefix.to_string(), x));
            }
        }
    }
}

/// `stage,label,op,metric,value` rows for every numeric or boolean entry.
pub fn csv_rows(report: &Report) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["stage", "label", "op", "metric", "value"])?;
    for s in &report.stages {
        let mut leaves = Vec::new();
        numeric_leaves("", &s.result, &mut leaves);
        for (k, v) in leaves {
            w.write_record([
                s.index.to_string(),
                s.label.clone(),
                s.op.clone(),
                k,
                format!("{v}"),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_walks_objects_and_arrays() {
        let v = json!({ "axes": [{ "nac": 3 }, { "nac": 4 }], "norm": "inf" });
        assert_eq!(lookup(&v, "axes.1.nac"), Some(&json!(4)));
        assert_eq!(as_number(lookup(&v, "norm").unwrap()), Some(f64::INFINITY));
        assert!(lookup(&v, "axes.7").is_none());
    }

    #[test]
    fn expectations_report_every_problem() {
        let e = Expect {
            metric: "x".into(),
            eq: None,
            tol: 0.0,
            min: Some(2.0),
            max: Some(1.0),
            equals: None,
        };
        let o = check(&e, &json!({ "x": 1.5 }));
        assert!(!o.ok);
        assert!(
            o.detail.contains(">= 2") && o.detail.contains("<= 1"),
            "{}",
            o.detail
        );
    }

    #[test]
    fn op_names_are_snake_case() {
        assert_eq!(
            op_name(&Op::Acl {
                coarse: "a".into(),
                fine: "b".into()
            }),
            "acl"
        );
        assert_eq!(
            op_name(&Op::LpCrossCheck {
                fields: vec![],
                p: 2.0
            }),
            "lp_cross_check"
        );
    }
}
