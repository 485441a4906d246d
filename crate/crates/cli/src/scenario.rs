//! Scenario files: TOML with `[domain]`, `[grid]`, `[phi]`, named
//! `[phis.*]`, `[fields.*]` and `[families.*]` tables, a `[[stage]]`
//! pipeline and an `[output]` table.
//!
//! Everything is checked before the first stage runs, and every diagnostic
//! names the line of the offending table.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use orlicz_core::generate::{FamilySpec, FieldSpec};
use orlicz_core::{BoxDomain, BoxGrid, Condition, PhiDescriptor, PhiFunction};
use serde::Deserialize;
use toml::{Spanned, Table, Value};

/// An input problem, anchored to a config line when one is known.
#[derive(Debug, Clone, PartialEq)]
pub struct Diag {
    pub line: Option<usize>,
    pub message: String,
}

impl Diag {
    pub fn new(line: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            line,
            message: message.into(),
        }
    }

    pub fn at(line: usize, message: impl Into<String>) -> Self {
        Self::new(Some(line), message)
    }
}

impl fmt::Display for Diag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diag {
                line: Some(l),
                message,
            } => write!(f, "line {l}: {message}"),
            Diag {
                line: None,
                message,
            } => f.write_str(message),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    #[serde(default)]
    description: String,
    domain: Option<Spanned<DomainSpec>>,
    grid: Option<Spanned<GridSpec>>,
    phi: Option<Spanned<Table>>,
    #[serde(default)]
    phis: BTreeMap<String, Spanned<Table>>,
    #[serde(default)]
    fields: BTreeMap<String, Spanned<Table>>,
    #[serde(default)]
    families: BTreeMap<String, Spanned<Table>>,
    #[serde(default)]
    stage: Vec<Spanned<Table>>,
    #[serde(default)]
    output: OutputSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainSpec {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpec {
    counts: Vec<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    /// JSON report path.
    pub report: Option<PathBuf>,
    /// One row per numeric report entry.
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub enum FieldSource {
    File(PathBuf),
    /// Generator sampled on the scenario grid refined `level` times.
    Generated {
        spec: FieldSpec,
        level: usize,
    },
}

#[derive(Debug, Clone)]
pub enum FamilySource {
    File(PathBuf),
    Generated(FamilySpec),
    Segment {
        from: Vec<f64>,
        to: Vec<f64>,
    },
    /// Curves of `family` meeting the support of the field `indicator`.
    Meeting {
        family: String,
        indicator: String,
        step: Option<f64>,
    },
    Select {
        family: String,
        indices: Vec<usize>,
    },
    Join {
        families: Vec<String>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileRef {
    #[allow(dead_code)]
    kind: String,
    path: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum DerivedFamily {
    Segment {
        from: Vec<f64>,
        to: Vec<f64>,
    },
    Meeting {
        family: String,
        indicator: String,
        step: Option<f64>,
    },
    Select {
        family: String,
        indices: Vec<usize>,
    },
    Join {
        families: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModulusKind {
    Modular,
    Norm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Quadrature,
    CurveIntegral,
    Gradient,
}

/// Sequences for the Fuglede stage.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceSpec {
    /// `u_i = i^height_power` on `|x[axis] - center| <= width_scale * i^-width_power`.
    ShrinkingStrip {
        axis: usize,
        #[serde(default)]
        center: f64,
        count: usize,
        #[serde(default = "half")]
        width_scale: f64,
        #[serde(default = "three")]
        width_power: f64,
        #[serde(default = "one")]
        height_power: f64,
        #[serde(default)]
        null_core: bool,
    },
    /// `u_i ≡ 1/i`.
    DecayingConstant { count: usize },
}

fn half() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

fn three() -> f64 {
    3.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Op {
    Modular {
        field: String,
    },
    Norm {
        field: String,
        tol: Option<f64>,
    },
    NormModular {
        field: String,
    },
    Membership {
        field: String,
    },
    LpCrossCheck {
        fields: Vec<String>,
        p: f64,
    },
    LeftInverse {
        x: Vec<f64>,
        tau: f64,
        tol: Option<f64>,
    },
    Conjugate {
        x: Vec<f64>,
        s: f64,
        t_max: Option<f64>,
    },
    Condition {
        condition: Condition,
        x_per_axis: Option<usize>,
    },
    Equivalence {
        other: String,
        l: f64,
        x_per_axis: Option<usize>,
    },
    Validate {
        x_per_axis: Option<usize>,
    },
    Holder {
        f: String,
        g: String,
        t_max: Option<f64>,
    },
    /// Pairs `(fields[i], fields[i+1 mod n])` under every listed integrand.
    HolderSuite {
        fields: Vec<String>,
        phis: Vec<String>,
    },
    Modulus {
        family: String,
        kind: ModulusKind,
        iterations: Option<usize>,
        #[serde(default)]
        level: usize,
    },
    /// Both moduli of `family` under `t^p`, and `|M̃ - M^p|`.
    ModulusConsistency {
        family: String,
        p: f64,
        iterations: Option<usize>,
    },
    Witness {
        family: String,
        levels: Vec<String>,
    },
    Properties {
        #[serde(default)]
        pairs: Vec<[String; 2]>,
        #[serde(default)]
        unions: Vec<[String; 2]>,
        #[serde(default)]
        witnesses: BTreeMap<String, Vec<String>>,
        witness_phi: Option<String>,
        iterations: Option<usize>,
        rel_tol: Option<f64>,
        abs_tol: Option<f64>,
    },
    Acl {
        coarse: String,
        fine: String,
    },
    Acc {
        coarse: String,
        fine: String,
        family: String,
        witness: Option<Vec<String>>,
    },
    Sobolev {
        coarse: String,
        fine: String,
    },
    Fuglede {
        sequence: SequenceSpec,
        family: String,
        #[serde(default)]
        level: usize,
    },
    Convergence {
        study: Study,
        sizes: Vec<usize>,
        data: Option<PathBuf>,
    },
    WriteField {
        field: String,
        path: PathBuf,
    },
    WriteCurves {
        family: String,
        path: PathBuf,
    },
}

/// A declared expectation on one entry of a stage's result.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expect {
    /// Dotted path into the stage result, e.g. `axes.0.nac_fraction`.
    pub metric: String,
    pub eq: Option<f64>,
    #[serde(default)]
    pub tol: f64,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub equals: Option<Value>,
}

#[derive(Debug, Clone)]
pub struct Stage {
    pub line: usize,
    pub label: Option<String>,
    pub phi: Option<String>,
    pub expect: Vec<Expect>,
    pub op: Op,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub grid: Option<BoxGrid>,
    pub domain: Option<BoxDomain>,
    pub phi: Option<(usize, PhiFunction)>,
    pub phis: BTreeMap<String, (usize, PhiFunction)>,
    pub fields: BTreeMap<String, (usize, FieldSource)>,
    pub families: BTreeMap<String, (usize, FamilySource)>,
    pub stages: Vec<Stage>,
    pub output: OutputSpec,
    /// Directory that relative paths are resolved against.
    pub base: PathBuf,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())]
        .bytes()
        .filter(|b| *b == b'\n')
        .count()
        + 1
}

fn take<T: for<'de> Deserialize<'de>>(table: Table, line: usize, what: &str) -> Result<T, Diag> {
    Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Diag::at(line, format!("{what}: {}", e.message())))
}

fn parse_phi(table: Table, line: usize, domain: &Option<BoxDomain>) -> Result<PhiFunction, Diag> {
    let d: PhiDescriptor = take(table, line, "integrand")?;
    let Some(domain) = domain else {
        return Err(Diag::at(line, "an integrand needs a [domain] or [grid]"));
    };
    PhiFunction::new(d, domain.clone()).map_err(|e| Diag::at(line, e.to_string()))
}

fn kind_of(table: &Table) -> Option<&str> {
    table.get("kind").and_then(Value::as_str)
}

fn parse_field(mut table: Table, line: usize, base: &Path) -> Result<FieldSource, Diag> {
    if kind_of(&table) == Some("file") {
        let r: FileRef = take(table, line, "field file")?;
        let path = base.join(r.path);
        if !path.is_file() {
            return Err(Diag::at(
                line,
                format!("field file {} does not exist", path.display()),
            ));
        }
        return Ok(FieldSource::File(path));
    }
    let level = match table.remove("level") {
        None => 0,
        Some(Value::Integer(l)) if l >= 0 => l as usize,
        Some(v) => {
            return Err(Diag::at(
                line,
                format!("level must be a nonnegative integer, got {v}"),
            ))
        }
    };
    Ok(FieldSource::Generated {
        spec: take(table, line, "field generator")?,
        level,
    })
}

fn parse_family(table: Table, line: usize, base: &Path) -> Result<FamilySource, Diag> {
    match kind_of(&table) {
        Some("file") => {
            let r: FileRef = take(table, line, "curve file")?;
            let path = base.join(r.path);
            if !path.is_file() {
                return Err(Diag::at(
                    line,
                    format!("curve file {} does not exist", path.display()),
                ));
            }
            Ok(FamilySource::File(path))
        }
        Some("segment" | "meeting" | "select" | "join") => {
            Ok(match take(table, line, "curve family")? {
                DerivedFamily::Segment { from, to } => FamilySource::Segment { from, to },
                DerivedFamily::Meeting {
                    family,
                    indicator,
                    step,
                } => FamilySource::Meeting {
                    family,
                    indicator,
                    step,
                },
                DerivedFamily::Select { family, indices } => {
                    FamilySource::Select { family, indices }
                }
                DerivedFamily::Join { families } => FamilySource::Join { families },
            })
        }
        _ => Ok(FamilySource::Generated(take(table, line, "curve family")?)),
    }
}

fn parse_stage(mut table: Table, line: usize) -> Result<Stage, Diag> {
    let label = match table.remove("label") {
        None => None,
        Some(Value::String(s)) => Some(s),
        Some(v) => return Err(Diag::at(line, format!("label must be a string, got {v}"))),
    };
    let phi = match table.remove("phi") {
        None => None,
        Some(Value::String(s)) => Some(s),
        Some(v) => {
            return Err(Diag::at(
                line,
                format!("phi must name an entry of [phis], got {v}"),
            ))
        }
    };
    let expect = match table.remove("expect") {
        None => Vec::new(),
        Some(v) => v
            .try_into()
            .map_err(|e: toml::de::Error| Diag::at(line, format!("expect: {}", e.message())))?,
    };
    let op = take(table, line, "stage")?;
    Ok(Stage {
        line,
        label,
        phi,
        expect,
        op,
    })
}

impl Scenario {
    pub fn parse(text: &str, base: &Path) -> Result<Self, Diag> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| line_of(text, s.start));
            Diag::new(line, e.message().trim().to_string())
        })?;
        let anchor = |s: &std::ops::Range<usize>| line_of(text, s.start);

        let mut domain = None;
        if let Some(d) = &raw.domain {
            let dl = anchor(&d.span());
            let spec = d.get_ref().clone();
            domain = Some(
                BoxDomain::new(spec.lower, spec.upper).map_err(|e| Diag::at(dl, e.to_string()))?,
            );
        }
        let mut grid = None;
        if let Some(g) = &raw.grid {
            let gl = anchor(&g.span());
            let counts = g.get_ref().counts.clone();
            let dom = domain
                .clone()
                .unwrap_or_else(|| BoxDomain::unit(counts.len()));
            grid = Some(BoxGrid::on(dom.clone(), counts).map_err(|e| Diag::at(gl, e.to_string()))?);
            domain = Some(dom);
        }
        let phi = match raw.phi {
            Some(t) => {
                let l = anchor(&t.span());
                Some((l, parse_phi(t.into_inner(), l, &domain)?))
            }
            None => None,
        };
        let mut phis = BTreeMap::new();
        for (name, t) in raw.phis {
            let l = anchor(&t.span());
            phis.insert(name, (l, parse_phi(t.into_inner(), l, &domain)?));
        }
        let mut fields = BTreeMap::new();
        for (name, t) in raw.fields {
            let l = anchor(&t.span());
            let src = parse_field(t.into_inner(), l, base)?;
            if matches!(src, FieldSource::Generated { .. }) && grid.is_none() {
                return Err(Diag::at(
                    l,
                    format!("generated field {name:?} needs a [grid]"),
                ));
            }
            fields.insert(name, (l, src));
        }
        let mut families = BTreeMap::new();
        for (name, t) in raw.families {
            let l = anchor(&t.span());
            let src = parse_family(t.into_inner(), l, base)?;
            if matches!(src, FamilySource::Generated(_)) && domain.is_none() {
                return Err(Diag::at(
                    l,
                    format!("generated family {name:?} needs a [domain] or [grid]"),
                ));
            }
            families.insert(name, (l, src));
        }
        let mut stages = Vec::new();
        for t in raw.stage {
            let l = anchor(&t.span());
            stages.push(parse_stage(t.into_inner(), l)?);
        }
        let sc = Scenario {
            name: raw.name,
            description: raw.description,
            grid,
            domain,
            phi,
            phis,
            fields,
            families,
            stages,
            output: raw.output,
            base: base.to_path_buf(),
        };
        sc.check_references()?;
        Ok(sc)
    }

    fn check_references(&self) -> Result<(), Diag> {
        let field = |l: usize, n: &str| -> Result<(), Diag> {
            if self.fields.contains_key(n) {
                Ok(())
            } else {
                Err(Diag::at(l, format!("undefined field {n:?}")))
            }
        };
        let family = |l: usize, n: &str| -> Result<(), Diag> {
            if self.families.contains_key(n) {
                Ok(())
            } else {
                Err(Diag::at(l, format!("undefined curve family {n:?}")))
            }
        };
        let phi = |l: usize, n: &str| -> Result<(), Diag> {
            if self.phis.contains_key(n) {
                Ok(())
            } else {
                Err(Diag::at(
                    l,
                    format!("undefined integrand {n:?} (declare it under [phis])"),
                ))
            }
        };
        for (l, src) in self.families.values() {
            match src {
                FamilySource::Meeting {
                    family: f,
                    indicator,
                    ..
                } => {
                    family(*l, f)?;
                    field(*l, indicator)?;
                }
                FamilySource::Select { family: f, .. } => family(*l, f)?,
                FamilySource::Join { families } => {
                    families.iter().try_for_each(|f| family(*l, f))?
                }
                _ => {}
            }
        }
        for s in &self.stages {
            let l = s.line;
            if let Some(p) = &s.phi {
                phi(l, p)?;
            }
            match &s.op {
                Op::Modular { field: f }
                | Op::Norm { field: f, .. }
                | Op::NormModular { field: f }
                | Op::Membership { field: f }
                | Op::WriteField { field: f, .. } => field(l, f)?,
                Op::LpCrossCheck { fields, .. } => fields.iter().try_for_each(|f| field(l, f))?,
                Op::Equivalence { other, .. } => phi(l, other)?,
                Op::Holder { f, g, .. } => {
                    field(l, f)?;
                    field(l, g)?;
                }
                Op::HolderSuite { fields, phis } => {
                    fields.iter().try_for_each(|f| field(l, f))?;
                    phis.iter().try_for_each(|p| phi(l, p))?;
                }
                Op::Modulus { family: f, .. }
                | Op::ModulusConsistency { family: f, .. }
                | Op::Fuglede { family: f, .. }
                | Op::WriteCurves { family: f, .. } => family(l, f)?,
                Op::Witness { family: f, levels } => {
                    family(l, f)?;
                    levels.iter().try_for_each(|v| field(l, v))?;
                }
                Op::Properties {
                    pairs,
                    unions,
                    witnesses,
                    witness_phi,
                    ..
                } => {
                    for [a, b] in pairs.iter().chain(unions) {
                        family(l, a)?;
                        family(l, b)?;
                    }
                    for [a, b] in unions {
                        for f in [a, b] {
                            if !witnesses.contains_key(f) {
                                return Err(Diag::at(
                                    l,
                                    format!("union member {f:?} has no entry in witnesses"),
                                ));
                            }
                        }
                    }
                    for (f, levels) in witnesses {
                        family(l, f)?;
                        levels.iter().try_for_each(|v| field(l, v))?;
                    }
                    if let Some(p) = witness_phi {
                        phi(l, p)?;
                    }
                }
                Op::Acl { coarse, fine } | Op::Sobolev { coarse, fine } => {
                    field(l, coarse)?;
                    field(l, fine)?;
                }
                Op::Acc {
                    coarse,
                    fine,
                    family: f,
                    witness,
                } => {
                    field(l, coarse)?;
                    field(l, fine)?;
                    family(l, f)?;
                    witness.iter().flatten().try_for_each(|v| field(l, v))?;
                }
                Op::LeftInverse { .. }
                | Op::Conjugate { .. }
                | Op::Condition { .. }
                | Op::Validate { .. }
                | Op::Convergence { .. } => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Scenario, Diag> {
        Scenario::parse(text, Path::new("."))
    }

    #[test]
    fn empty_pipeline_parses() {
        let s = parse("name = \"empty\"\n").unwrap();
        assert!(s.stages.is_empty());
    }

    #[test]
    fn syntax_errors_carry_lines() {
        let e = parse("name = \"x\"\n[grid]\ncounts = [3, \n").unwrap_err();
        assert!(e.line.is_some(), "{e}");
        let e = parse("name = \"x\"\n\n[grid]\ncounts = [3, 3]\nbogus = 1\n").unwrap_err();
        assert!(e.line.is_some(), "{e}");
    }

    #[test]
    fn undefined_references_point_at_the_stage() {
        let text = "name = \"x\"\n[grid]\ncounts = [3, 3]\n[phi]\nfamily = \"ramp\"\n\n[[stage]]\nop = \"modular\"\nfield = \"nope\"\n";
        let e = parse(text).unwrap_err();
        assert_eq!(e.line, Some(7), "{e}");
        assert!(e.message.contains("nope"));
    }

    #[test]
    fn bad_generator_points_at_its_table() {
        let text = "name = \"x\"\n[grid]\ncounts = [3, 3]\n\n[fields.u]\nkind = \"stpe\"\n";
        let e = parse(text).unwrap_err();
        assert_eq!(e.line, Some(5), "{e}");
    }
}
