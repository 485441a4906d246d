//! Weak Φ-functions `φ(x, t)` and sampled checks of their structural
//! conditions.
//!
//! An integrand is a [`PhiDescriptor`] (one of a fixed set of families plus
//! parameters) bound to the box on which it is defined. Evaluation returns an
//! extended real: `f64::INFINITY` is a legal value.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::grid::BoxDomain;

/// Affine scalar function `offset + gradient . x` used for variable exponents
/// and double-phase weights. Missing gradient entries are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineField {
    pub offset: f64,
    #[serde(default)]
    pub gradient: Vec<f64>,
}

impl AffineField {
    pub fn constant(c: f64) -> Self {
        Self {
            offset: c,
            gradient: Vec::new(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.offset
            + self
                .gradient
                .iter()
                .zip(x)
                .map(|(g, xi)| g * xi)
                .sum::<f64>()
    }

    /// Range over a box (attained at corners).
    pub fn range(&self, domain: &BoxDomain) -> (f64, f64) {
        let (mut lo, mut hi) = (self.offset, self.offset);
        for k in 0..domain.dim() {
            let g = self.gradient.get(k).copied().unwrap_or(0.0);
            let (a, b) = (g * domain.lower[k], g * domain.upper[k]);
            lo += a.min(b);
            hi += a.max(b);
        }
        (lo, hi)
    }
}

/// One-dimensional Orlicz profiles `φ(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrliczProfile {
    /// `t^p ln(e + t)`
    PowerLog { p: f64 },
    /// `e^t - 1`
    Exponential,
}

/// The integrand families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PhiDescriptor {
    /// `t^p`, `p >= 1`.
    Power { p: f64 },
    /// `x`-independent Orlicz integrand.
    Orlicz { profile: OrliczProfile },
    /// `t^{p(x)}` with affine `p(x) >= 1` on the domain.
    VariableExponent { exponent: AffineField },
    /// `t^p + a(x) t^q` with `a(x) = max(0, affine)`.
    DoublePhase { p: f64, q: f64, weight: AffineField },
    /// `0` for `t <= 1`, `t - 1` beyond: vanishes on `u = 1` while
    /// giving the constant density a positive norm.
    Ramp,
    /// With `y = x[axis] - center`: `t` on `y = 0`; for `y != 0`, `0` while
    /// `t <= 1/|y|` and `t` above that threshold.
    RadialGate {
        #[serde(default)]
        axis: usize,
        #[serde(default)]
        center: f64,
    },
    /// `factor * base(x, t)`.
    Scaled {
        factor: f64,
        base: Box<PhiDescriptor>,
    },
    /// `sup_{0 <= t <= t_max} (s t - base(x, t))`, clipped at 0.
    Conjugate {
        base: Box<PhiDescriptor>,
        t_max: f64,
    },
}

/// Declared structural metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiMeta {
    pub convex: bool,
    pub left_continuous: bool,
    /// Exponent `p` with `φ(x,t)/t^p` almost increasing, if known.
    pub p_inc: Option<f64>,
    /// Exponent `q` with `φ(x,t)/t^q` almost decreasing, if known.
    pub q_dec: Option<f64>,
    /// Constant `L >= 1` of the almost-increasing property of `φ(x,t)/t`.
    pub l_const: f64,
}

/// An integrand bound to its domain box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiFunction {
    descriptor: PhiDescriptor,
    domain: BoxDomain,
    meta: PhiMeta,
}

/// Default cap for left-inverse bracketing.
pub const DEFAULT_INVERSE_T_MAX: f64 = 1e8;

impl PhiFunction {
    pub fn new(descriptor: PhiDescriptor, domain: BoxDomain) -> Result<Self> {
        let meta = derive_meta(&descriptor, &domain)?;
        Ok(Self {
            descriptor,
            domain,
            meta,
        })
    }

    pub fn power(p: f64, domain: BoxDomain) -> Result<Self> {
        Self::new(PhiDescriptor::Power { p }, domain)
    }

    pub fn ramp(domain: BoxDomain) -> Self {
        Self::new(PhiDescriptor::Ramp, domain).expect("ramp has no parameters")
    }

    pub fn radial_gate(domain: BoxDomain) -> Self {
        Self::new(
            PhiDescriptor::RadialGate {
                axis: 0,
                center: 0.0,
            },
            domain,
        )
        .expect("axis 0 exists")
    }

    /// The conjugate integrand of `self`, evaluated by grid scan up to `t_max`.
    pub fn conjugate(&self, t_max: f64) -> Result<Self> {
        Self::new(
            PhiDescriptor::Conjugate {
                base: Box::new(self.descriptor.clone()),
                t_max,
            },
            self.domain.clone(),
        )
    }

    pub fn descriptor(&self) -> &PhiDescriptor {
        &self.descriptor
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn meta(&self) -> &PhiMeta {
        &self.meta
    }

    pub fn is_convex(&self) -> bool {
        self.meta.convex
    }

    /// True when the value does not depend on `x`.
    pub fn is_homogeneous(&self) -> bool {
        fn go(d: &PhiDescriptor) -> bool {
            match d {
                PhiDescriptor::Power { .. }
                | PhiDescriptor::Orlicz { .. }
                | PhiDescriptor::Ramp => true,
                PhiDescriptor::VariableExponent { exponent } => {
                    exponent.gradient.iter().all(|g| *g == 0.0)
                }
                PhiDescriptor::DoublePhase { weight, .. } => {
                    weight.gradient.iter().all(|g| *g == 0.0)
                }
                PhiDescriptor::RadialGate { .. } => false,
                PhiDescriptor::Scaled { base, .. } | PhiDescriptor::Conjugate { base, .. } => {
                    go(base)
                }
            }
        }
        go(&self.descriptor)
    }

    /// Hyperplanes `x[axis] = offset` near which the integrand is singular.
    /// Condition sampling grades its `x`-grid toward these.
    pub fn singular_hyperplanes(&self) -> Vec<Hyperplane> {
        fn go(d: &PhiDescriptor, out: &mut Vec<Hyperplane>) {
            match d {
                PhiDescriptor::RadialGate { axis, center } => out.push(Hyperplane {
                    axis: *axis,
                    offset: *center,
                }),
                PhiDescriptor::Scaled { base, .. } | PhiDescriptor::Conjugate { base, .. } => {
                    go(base, out)
                }
                _ => {}
            }
        }
        let mut out = Vec::new();
        go(&self.descriptor, &mut out);
        out
    }

    /// `φ(x, t)` without precondition checks. `t = +inf` is allowed.
    #[inline]
    pub fn value(&self, x: &[f64], t: f64) -> f64 {
        eval_descriptor(&self.descriptor, x, t)
    }

    /// A subgradient of `t -> φ(x, t)` (the left derivative where the
    /// integrand has a corner; the right derivative at `t = 0`).
    pub fn derivative(&self, x: &[f64], t: f64) -> f64 {
        derivative_descriptor(&self.descriptor, x, t)
    }
}

fn derive_meta(d: &PhiDescriptor, domain: &BoxDomain) -> Result<PhiMeta> {
    let finite_ge = |name: &str, v: f64, lo: f64| -> Result<()> {
        if v.is_finite() && v >= lo {
            Ok(())
        } else {
            input(format!("{name} must be finite and >= {lo}, got {v}"))
        }
    };
    Ok(match d {
        PhiDescriptor::Power { p } => {
            finite_ge("power exponent p", *p, 1.0)?;
            PhiMeta {
                convex: true,
                left_continuous: true,
                p_inc: Some(*p),
                q_dec: Some(*p),
                l_const: 1.0,
            }
        }
        PhiDescriptor::Orlicz { profile } => match profile {
            OrliczProfile::PowerLog { p } => {
                finite_ge("power-log exponent p", *p, 1.0)?;
                PhiMeta {
                    convex: true,
                    left_continuous: true,
                    p_inc: Some(*p),
                    q_dec: Some(p + 1.0),
                    l_const: 1.0,
                }
            }
            OrliczProfile::Exponential => PhiMeta {
                convex: true,
                left_continuous: true,
                p_inc: Some(1.0),
                q_dec: None,
                l_const: 1.0,
            },
        },
        PhiDescriptor::VariableExponent { exponent } => {
            if exponent.gradient.len() > domain.dim() {
                return input("exponent gradient has more entries than the domain has axes");
            }
            let (lo, hi) = exponent.range(domain);
            finite_ge("variable exponent minimum", lo, 1.0)?;
            PhiMeta {
                convex: true,
                left_continuous: true,
                p_inc: Some(lo),
                q_dec: Some(hi),
                l_const: 1.0,
            }
        }
        PhiDescriptor::DoublePhase { p, q, weight } => {
            finite_ge("double-phase p", *p, 1.0)?;
            finite_ge("double-phase q", *q, *p)?;
            if weight.gradient.len() > domain.dim() {
                return input("weight gradient has more entries than the domain has axes");
            }
            PhiMeta {
                convex: true,
                left_continuous: true,
                p_inc: Some(*p),
                q_dec: Some(*q),
                l_const: 1.0,
            }
        }
        PhiDescriptor::Ramp => PhiMeta {
            convex: true,
            left_continuous: true,
            p_inc: Some(1.0),
            q_dec: None,
            l_const: 1.0,
        },
        PhiDescriptor::RadialGate { axis, center } => {
            if *axis >= domain.dim() {
                return input(format!(
                    "gate axis {axis} out of range for a {}-d domain",
                    domain.dim()
                ));
            }
            if !center.is_finite() {
                return input("gate center must be finite");
            }
            PhiMeta {
                convex: false,
                left_continuous: true,
                p_inc: Some(1.0),
                q_dec: None,
                l_const: 1.0,
            }
        }
        PhiDescriptor::Scaled { factor, base } => {
            if !(factor.is_finite() && *factor > 0.0) {
                return input(format!(
                    "scale factor must be finite and positive, got {factor}"
                ));
            }
            derive_meta(base, domain)?
        }
        PhiDescriptor::Conjugate { base, t_max } => {
            if !(t_max.is_finite() && *t_max > 0.0) {
                return input(format!(
                    "conjugate t_max must be finite and positive, got {t_max}"
                ));
            }
            derive_meta(base, domain)?;
            PhiMeta {
                convex: true,
                left_continuous: true,
                p_inc: Some(1.0),
                q_dec: None,
                l_const: 1.0,
            }
        }
    })
}

fn eval_descriptor(d: &PhiDescriptor, x: &[f64], t: f64) -> f64 {
    match d {
        PhiDescriptor::Power { p } => {
            if *p == 1.0 {
                t
            } else if *p == 2.0 {
                t * t
            } else {
                t.powf(*p)
            }
        }
        PhiDescriptor::Orlicz { profile } => match profile {
            OrliczProfile::PowerLog { p } => {
                if t == 0.0 {
                    0.0
                } else {
                    t.powf(*p) * (std::f64::consts::E + t).ln()
                }
            }
            OrliczProfile::Exponential => t.exp_m1(),
        },
        PhiDescriptor::VariableExponent { exponent } => t.powf(exponent.eval(x)),
        PhiDescriptor::DoublePhase { p, q, weight } => {
            let a = weight.eval(x).max(0.0);
            let tq = if a == 0.0 { 0.0 } else { a * t.powf(*q) };
            t.powf(*p) + tq
        }
        PhiDescriptor::Ramp => {
            if t <= 1.0 {
                0.0
            } else {
                t - 1.0
            }
        }
        PhiDescriptor::RadialGate { axis, center } => {
            let y = (x[*axis] - center).abs();
            if y == 0.0 || t > 1.0 / y {
                t
            } else {
                0.0
            }
        }
        PhiDescriptor::Scaled { factor, base } => factor * eval_descriptor(base, x, t),
        PhiDescriptor::Conjugate { base, t_max } => conjugate_point(base, x, t, *t_max).0,
    }
}

fn derivative_descriptor(d: &PhiDescriptor, x: &[f64], t: f64) -> f64 {
    match d {
        PhiDescriptor::Power { p } => {
            if *p == 1.0 {
                1.0
            } else {
                p * t.powf(p - 1.0)
            }
        }
        PhiDescriptor::Orlicz { profile } => match profile {
            OrliczProfile::PowerLog { p } => {
                let e = std::f64::consts::E;
                let tp1 = if *p == 1.0 { 1.0 } else { t.powf(p - 1.0) };
                p * tp1 * (e + t).ln() + t.powf(*p) / (e + t)
            }
            OrliczProfile::Exponential => t.exp(),
        },
        PhiDescriptor::VariableExponent { exponent } => {
            let p = exponent.eval(x);
            if p == 1.0 {
                1.0
            } else {
                p * t.powf(p - 1.0)
            }
        }
        PhiDescriptor::DoublePhase { p, q, weight } => {
            let a = weight.eval(x).max(0.0);
            let dp = if *p == 1.0 { 1.0 } else { p * t.powf(p - 1.0) };
            let dq = if a == 0.0 {
                0.0
            } else if *q == 1.0 {
                a
            } else {
                a * q * t.powf(q - 1.0)
            };
            dp + dq
        }
        PhiDescriptor::Ramp => {
            if t <= 1.0 {
                0.0
            } else {
                1.0
            }
        }
        PhiDescriptor::RadialGate { axis, center } => {
            let y = (x[*axis] - center).abs();
            if y == 0.0 || t > 1.0 / y {
                1.0
            } else {
                0.0
            }
        }
        PhiDescriptor::Scaled { factor, base } => factor * derivative_descriptor(base, x, t),
        // The maximizer of s t - φ(t) is a subgradient of the conjugate at s.
        PhiDescriptor::Conjugate { base, t_max } => conjugate_point(base, x, t, *t_max).1,
    }
}

/// Conjugate value and maximizer at `s`; closed form for powers, scan
/// otherwise.
fn conjugate_point(base: &PhiDescriptor, x: &[f64], s: f64, t_max: f64) -> (f64, f64) {
    match base {
        PhiDescriptor::Power { p } if s.is_finite() && s >= 0.0 => {
            let arg = if *p == 1.0 {
                if s > 1.0 {
                    t_max
                } else {
                    0.0
                }
            } else {
                (s / p).powf(1.0 / (p - 1.0)).min(t_max)
            };
            ((s * arg - arg.powf(*p)).max(0.0), arg)
        }
        _ if known_convex(base) && s.is_finite() && s > 0.0 => {
            // Concave objective: golden section over the whole range.
            let obj = |t: f64| s * t - eval_descriptor(base, x, t);
            let (arg, v) = golden_max(&obj, 0.0, t_max);
            let end = obj(t_max);
            if end > v {
                (end.max(0.0), t_max)
            } else if v > 0.0 {
                (v, arg)
            } else {
                (0.0, 0.0)
            }
        }
        _ => conjugate_scan(|tt| eval_descriptor(base, x, tt), s, t_max),
    }
}

fn known_convex(d: &PhiDescriptor) -> bool {
    match d {
        PhiDescriptor::Power { .. }
        | PhiDescriptor::Orlicz { .. }
        | PhiDescriptor::VariableExponent { .. }
        | PhiDescriptor::DoublePhase { .. }
        | PhiDescriptor::Ramp
        | PhiDescriptor::Conjugate { .. } => true,
        PhiDescriptor::RadialGate { .. } => false,
        PhiDescriptor::Scaled { base, .. } => known_convex(base),
    }
}

/// Normalized scan grid on `[0, 1]`: uniform and log-spaced points merged.
fn scan_grid() -> &'static [f64] {
    static GRID: OnceLock<Vec<f64>> = OnceLock::new();
    GRID.get_or_init(|| {
        const UNIFORM: usize = 1024;
        const LOG: usize = 1024;
        let mut g: Vec<f64> = (0..=UNIFORM).map(|i| i as f64 / UNIFORM as f64).collect();
        g.extend((0..LOG).map(|i| 10f64.powf(-12.0 + 12.0 * i as f64 / (LOG - 1) as f64)));
        g.sort_by(f64::total_cmp);
        g.dedup();
        g
    })
}

/// `sup_{0<=t<=t_max} (s t - φ(t))` clipped at 0, and a maximizer.
///
/// Grid scan followed by golden-section refinement on the two cells around
/// the best grid point. For convex φ the objective is concave, so the
/// refinement converges to the true supremum on `[0, t_max]`.
fn conjugate_scan<F: Fn(f64) -> f64>(phi: F, s: f64, t_max: f64) -> (f64, f64) {
    if s == 0.0 {
        return (0.0, 0.0);
    }
    if s.is_infinite() {
        return (f64::INFINITY, t_max);
    }
    let grid = scan_grid();
    let obj = |t: f64| s * t - phi(t);
    let (mut best_i, mut best) = (0, 0.0);
    for (i, &g) in grid.iter().enumerate() {
        let v = obj(g * t_max);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let mut arg = grid[best_i] * t_max;
    if best_i > 0 {
        let lo = grid[best_i - 1] * t_max;
        let hi = grid[(best_i + 1).min(grid.len() - 1)] * t_max;
        let (t, v) = golden_max(&obj, lo, hi);
        if v > best {
            best = v;
            arg = t;
        }
    }
    (best.max(0.0), arg)
}

fn golden_max<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..90 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        if (b - a).abs() <= 1e-15 * b.abs().max(1e-300) {
            break;
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn check_point(phi: &PhiFunction, x: &[f64]) -> Result<()> {
    if x.len() != phi.domain.dim() {
        return input(format!(
            "point has {} coordinates, domain has {}",
            x.len(),
            phi.domain.dim()
        ));
    }
    if !phi.domain.contains(x, 1e-12) {
        return input(format!("point {x:?} lies outside the integrand's domain"));
    }
    Ok(())
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 {
        Ok(())
    } else {
        input(format!("{name} must be >= 0, got {v}"))
    }
}

/// `φ(x, t)` with domain and sign checks.
pub fn eval_phi(phi: &PhiFunction, x: &[f64], t: f64) -> Result<f64> {
    check_point(phi, x)?;
    check_nonneg("t", t)?;
    Ok(phi.value(x, t))
}

/// Left-inverse `inf{t >= 0 : φ(x,t) >= τ}` to within `tol`, bracketing up
/// to [`DEFAULT_INVERSE_T_MAX`].
pub fn left_inverse(phi: &PhiFunction, x: &[f64], tau: f64, tol: f64) -> Result<f64> {
    left_inverse_capped(phi, x, tau, tol, DEFAULT_INVERSE_T_MAX)
}

/// [`left_inverse`] with an explicit bracketing cap. Returns `+inf` when
/// `φ(x, t_max) < τ`.
pub fn left_inverse_capped(
    phi: &PhiFunction,
    x: &[f64],
    tau: f64,
    tol: f64,
    t_max: f64,
) -> Result<f64> {
    check_point(phi, x)?;
    check_nonneg("tau", tau)?;
    if !(tol > 0.0) {
        return input(format!("tolerance must be positive, got {tol}"));
    }
    left_inverse_unchecked(phi, x, tau, tol, t_max)
}

pub(crate) fn left_inverse_unchecked(
    phi: &PhiFunction,
    x: &[f64],
    tau: f64,
    tol: f64,
    t_max: f64,
) -> Result<f64> {
    if tau == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, tol.min(1.0));
    let mut prev = phi.value(x, 0.0);
    loop {
        let v = phi.value(x, hi);
        if v < prev {
            return Err(Error::Integrity(format!(
                "φ decreased from {prev} to {v} at t = {hi} (x = {x:?}); not a Φ-function"
            )));
        }
        if v >= tau {
            break;
        }
        if hi >= t_max {
            return Ok(f64::INFINITY);
        }
        prev = v;
        lo = hi;
        hi = (hi * 2.0).min(t_max);
    }
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi.value(x, mid) >= tau {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fenchel-type conjugate `sup_{0<=t<=t_max}(s t - φ(x,t))`, clipped at 0.
pub fn conjugate_phi(phi: &PhiFunction, x: &[f64], s: f64, t_max: f64) -> Result<f64> {
    check_point(phi, x)?;
    check_nonneg("s", s)?;
    if !(t_max > 0.0 && t_max.is_finite()) {
        return input(format!("t_max must be finite and positive, got {t_max}"));
    }
    Ok(conjugate_scan(|t| phi.value(x, t), s, t_max).0)
}

// ---------------------------------------------------------------------------
// Sampled condition checks

/// The hyperplane `x[axis] = offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub axis: usize,
    pub offset: f64,
}

/// Deterministic sampling plan for condition checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    /// Uniform nodes per axis of the domain box.
    pub x_per_axis: usize,
    /// Logarithmic `t`-grid.
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
    /// Logarithmic candidate set for `β`.
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_count: usize,
    /// Extra coordinates at `offset ± 2^-j * extent`, `j = 1..=focus_depth`.
    pub focus: Vec<Hyperplane>,
    pub focus_depth: usize,
    /// Almost-monotonicity constants above this are reported as failures.
    pub max_constant: f64,
    /// (A1): smallest acceptable `β`, and dyadic subdivision depth for the
    /// sub-boxes standing in for balls.
    pub a1_min_beta: f64,
    pub a1_levels: usize,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self {
            x_per_axis: 33,
            t_min: 1e-4,
            t_max: 1e4,
            t_count: 65,
            beta_min: 1e-4,
            beta_max: 1e4,
            beta_count: 129,
            focus: Vec::new(),
            focus_depth: 48,
            max_constant: 100.0,
            a1_min_beta: 1e-4,
            a1_levels: 3,
        }
    }
}

impl SampleSpec {
    /// Defaults, graded toward the integrand's singular hyperplanes.
    pub fn for_phi(phi: &PhiFunction) -> Self {
        Self {
            focus: phi.singular_hyperplanes(),
            ..Self::default()
        }
    }

    pub fn t_points(&self) -> Vec<f64> {
        log_points(self.t_min, self.t_max, self.t_count)
    }

    pub fn beta_candidates(&self) -> Vec<f64> {
        log_points(self.beta_min, self.beta_max, self.beta_count)
    }

    /// Tensor product of per-axis coordinate lists.
    pub fn x_points(&self, domain: &BoxDomain) -> Vec<Vec<f64>> {
        let n = domain.dim();
        let m = self.x_per_axis.max(2);
        let axes: Vec<Vec<f64>> = (0..n)
            .map(|k| {
                let (a, b) = (domain.lower[k], domain.upper[k]);
                let mut c: Vec<f64> = (0..m)
                    .map(|j| {
                        if j + 1 == m {
                            b
                        } else {
                            a + (b - a) * j as f64 / (m - 1) as f64
                        }
                    })
                    .collect();
                for h in self.focus.iter().filter(|h| h.axis == k) {
                    c.push(h.offset);
                    for j in 1..=self.focus_depth {
                        let d = (b - a) * 0.5f64.powi(j as i32);
                        c.push(h.offset - d);
                        c.push(h.offset + d);
                    }
                }
                c.retain(|v| *v >= a && *v <= b);
                c.sort_by(f64::total_cmp);
                c.dedup();
                c
            })
            .collect();
        let total: usize = axes.iter().map(Vec::len).product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        for _ in 0..total {
            out.push((0..n).map(|k| axes[k][idx[k]]).collect());
            for k in (0..n).rev() {
                idx[k] += 1;
                if idx[k] < axes[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
        out
    }
}

fn log_points(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == count {
                hi
            } else {
                10f64.powf(a + (b - a) * i as f64 / (count - 1) as f64)
            }
        })
        .collect()
}

/// Conditions that can be checked by sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Condition {
    /// `∃β∈(0,1): φ(x,β) <= 1 <= φ(x,1/β)`.
    A0,
    /// `∃β>0: φ(x,β) >= δ` (`δ = 1` is the plain form).
    WeakA0 {
        #[serde(default = "one")]
        delta: f64,
    },
    /// `β φ⁻¹(x,t) <= φ⁻¹(y,t)` on sub-boxes `B`, `t ∈ [1, 1/|B|]`.
    A1,
    /// (A2) quantifies over an auxiliary `h ∈ L¹ ∩ L^∞`; not checkable.
    A2,
    /// `φ(x,t)/t^p` almost increasing.
    AInc { p: f64 },
    /// `φ(x,t)/t^q` almost decreasing.
    ADec { q: f64 },
}

fn one() -> f64 {
    1.0
}

impl Condition {
    pub fn weak_a0() -> Self {
        Condition::WeakA0 { delta: 1.0 }
    }

    fn label(&self) -> String {
        match self {
            Condition::A0 => "A0".into(),
            Condition::WeakA0 { delta } if *delta == 1.0 => "weakA0".into(),
            Condition::WeakA0 { delta } => format!("weakA0(delta={delta})"),
            Condition::A1 => "A1".into(),
            Condition::A2 => "A2".into(),
            Condition::AInc { p } => format!("aInc_{p}"),
            Condition::ADec { q } => format!("aDec_{q}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

/// A sample where a candidate constant is refuted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refutation {
    pub beta: f64,
    pub x: Vec<f64>,
    #[serde(with = "crate::ext::serde_ext")]
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// The `β` that works.
    Beta {
        beta: f64,
    },
    /// Measured almost-monotonicity constant.
    Constant {
        l: f64,
    },
    /// Failing sample: a point `x`, parameter(s) `t` (and `s` for pair
    /// conditions) and a description of what broke.
    Counterexample {
        x: Vec<f64>,
        t: f64,
        s: Option<f64>,
        detail: String,
    },
    /// One counterexample per candidate `β`.
    Refutations {
        refutations: Vec<Refutation>,
    },
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub condition: String,
    pub verdict: Verdict,
    pub witness: Witness,
    pub samples: SampleSpec,
    pub x_samples: usize,
}

/// Check a structural condition on a deterministic sample.
pub fn check_condition(
    phi: &PhiFunction,
    cond: Condition,
    samples: &SampleSpec,
) -> Result<ConditionReport> {
    let xs = samples.x_points(&phi.domain);
    let (verdict, witness) = match cond {
        Condition::A2 => return Err(Error::Unsupported(
            "(A2) quantifies over an auxiliary h in L^1 ∩ L^∞ and has no effective sampled check"
                .into(),
        )),
        Condition::WeakA0 { delta } => {
            if !(delta > 0.0) {
                return input(format!("weakA0 needs delta > 0, got {delta}"));
            }
            check_weak_a0(phi, &xs, delta, samples)
        }
        Condition::A0 => check_a0(phi, &xs, samples),
        Condition::AInc { p } => check_almost_monotone(phi, &xs, p, true, samples),
        Condition::ADec { q } => check_almost_monotone(phi, &xs, q, false, samples),
        Condition::A1 => check_a1(phi, &xs, samples)?,
    };
    Ok(ConditionReport {
        condition: cond.label(),
        verdict,
        witness,
        samples: samples.clone(),
        x_samples: xs.len(),
    })
}

/// First sampled `x` with `φ(x, β) < δ`, if any.
pub fn weak_a0_counterexample(
    phi: &PhiFunction,
    xs: &[Vec<f64>],
    beta: f64,
    delta: f64,
) -> Option<(Vec<f64>, f64)> {
    xs.iter().find_map(|x| {
        let v = phi.value(x, beta);
        (v < delta).then(|| (x.clone(), v))
    })
}

fn check_weak_a0(
    phi: &PhiFunction,
    xs: &[Vec<f64>],
    delta: f64,
    samples: &SampleSpec,
) -> (Verdict, Witness) {
    let cands = samples.beta_candidates();
    let mut refutations = Vec::new();
    for (i, &beta) in cands.iter().enumerate() {
        match weak_a0_counterexample(phi, xs, beta, delta) {
            Some((x, value)) => refutations.push(Refutation { beta, x, value }),
            None => {
                // φ is non-decreasing in t, so passing candidates form an
                // up-set; bisect down toward the smallest one.
                let mut hi = beta;
                if i > 0 {
                    let mut lo = cands[i - 1];
                    for _ in 0..200 {
                        if hi - lo <= 1e-12 * hi {
                            break;
                        }
                        let mid = 0.5 * (lo + hi);
                        if weak_a0_counterexample(phi, xs, mid, delta).is_none() {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                }
                return (Verdict::Pass, Witness::Beta { beta: hi });
            }
        }
    }
    (Verdict::Fail, Witness::Refutations { refutations })
}

fn a0_counterexample(phi: &PhiFunction, xs: &[Vec<f64>], beta: f64) -> Option<Refutation> {
    xs.iter().find_map(|x| {
        let low = phi.value(x, beta);
        if low > 1.0 {
            return Some(Refutation {
                beta,
                x: x.clone(),
                value: low,
            });
        }
        let high = phi.value(x, 1.0 / beta);
        (high < 1.0).then(|| Refutation {
            beta,
            x: x.clone(),
            value: high,
        })
    })
}

fn check_a0(phi: &PhiFunction, xs: &[Vec<f64>], samples: &SampleSpec) -> (Verdict, Witness) {
    // Smaller β makes both inequalities easier: passing candidates form a
    // down-set, so search from the top and bisect upward toward 1.
    let cands: Vec<f64> = samples
        .beta_candidates()
        .into_iter()
        .filter(|b| *b < 1.0)
        .rev()
        .collect();
    let mut refutations = Vec::new();
    for (i, &beta) in cands.iter().enumerate() {
        match a0_counterexample(phi, xs, beta) {
            Some(r) => refutations.push(r),
            None => {
                let mut lo = beta;
                let mut hi = if i == 0 { 1.0 } else { cands[i - 1] };
                for _ in 0..200 {
                    if hi - lo <= 1e-12 {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    if mid >= 1.0 {
                        break;
                    }
                    if a0_counterexample(phi, xs, mid).is_none() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return (Verdict::Pass, Witness::Beta { beta: lo });
            }
        }
    }
    if refutations.is_empty() {
        return (Verdict::Indeterminate, Witness::None);
    }
    (Verdict::Fail, Witness::Refutations { refutations })
}

/// Measured constant `L` of almost-monotonicity of `φ(x,t)/t^e` over the
/// sample, with the worst pair `(x, s, t)`.
fn almost_monotone_constant(
    phi: &PhiFunction,
    xs: &[Vec<f64>],
    ts: &[f64],
    e: f64,
    increasing: bool,
) -> (f64, Option<(Vec<f64>, f64, f64)>) {
    let mut worst = 1.0;
    let mut witness = None;
    for x in xs {
        let r: Vec<f64> = ts.iter().map(|&t| phi.value(x, t) / t.powf(e)).collect();
        // For increasing: need r(s) <= L r(t) for s <= t, so compare r(t)
        // against the running max. For decreasing: r(t) <= L r(s), compare
        // against the running min.
        let mut ext_i = 0;
        for j in 0..ts.len() {
            let better = if increasing {
                r[j] > r[ext_i]
            } else {
                r[j] < r[ext_i]
            };
            if better {
                ext_i = j;
            }
            let (num, den) = if increasing {
                (r[ext_i], r[j])
            } else {
                (r[j], r[ext_i])
            };
            let ratio = if num == 0.0 {
                continue;
            } else if den == 0.0 || num.is_infinite() && den.is_finite() {
                f64::INFINITY
            } else if num.is_infinite() {
                1.0
            } else {
                num / den
            };
            if ratio > worst {
                worst = ratio;
                witness = Some((x.clone(), ts[ext_i], ts[j]));
            }
        }
    }
    (worst, witness)
}

fn check_almost_monotone(
    phi: &PhiFunction,
    xs: &[Vec<f64>],
    e: f64,
    increasing: bool,
    samples: &SampleSpec,
) -> (Verdict, Witness) {
    let ts = samples.t_points();
    let (l, witness) = almost_monotone_constant(phi, xs, &ts, e, increasing);
    if l <= samples.max_constant {
        (Verdict::Pass, Witness::Constant { l })
    } else {
        let (x, s, t) = witness.expect("a constant above 1 has a witness pair");
        let detail = format!(
            "φ(x,t)/t^{e} ratio {l:e} between s = {s:e} and t = {t:e} exceeds the bound {}",
            samples.max_constant
        );
        (
            Verdict::Fail,
            Witness::Counterexample {
                x,
                t,
                s: Some(s),
                detail,
            },
        )
    }
}

/// Measured `(aInc)_1` constant over the sample.
pub fn sampled_inc1_constant(phi: &PhiFunction, samples: &SampleSpec) -> f64 {
    let xs = samples.x_points(&phi.domain);
    almost_monotone_constant(phi, &xs, &samples.t_points(), 1.0, true).0
}

fn check_a1(
    phi: &PhiFunction,
    xs: &[Vec<f64>],
    samples: &SampleSpec,
) -> Result<(Verdict, Witness)> {
    let domain = &phi.domain;
    let n = domain.dim();
    let ts: Vec<f64> = samples
        .t_points()
        .into_iter()
        .filter(|t| *t >= 1.0)
        .collect();
    // Left-inverse table, computed on demand per t index.
    let mut inv: Vec<Option<Vec<f64>>> = vec![None; ts.len()];
    let mut beta_emp = f64::INFINITY;
    let mut witness: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    let mut any_range = false;
    for level in 1..=samples.a1_levels {
        let per_axis = 1usize << level;
        let boxes = per_axis.pow(n as u32);
        for b in 0..boxes {
            let mut cell = vec![0usize; n];
            let mut rem = b;
            for c in cell.iter_mut().rev() {
                *c = rem % per_axis;
                rem /= per_axis;
            }
            let lo: Vec<f64> = (0..n)
                .map(|k| domain.lower[k] + domain.extent(k) * cell[k] as f64 / per_axis as f64)
                .collect();
            let hi: Vec<f64> = (0..n)
                .map(|k| {
                    domain.lower[k] + domain.extent(k) * (cell[k] + 1) as f64 / per_axis as f64
                })
                .collect();
            let vol: f64 = (0..n).map(|k| hi[k] - lo[k]).product();
            let members: Vec<usize> = xs
                .iter()
                .enumerate()
                .filter(|(_, x)| (0..n).all(|k| x[k] >= lo[k] && x[k] <= hi[k]))
                .map(|(i, _)| i)
                .collect();
            if members.len() < 2 {
                continue;
            }
            for (ti, &t) in ts.iter().enumerate() {
                if t > 1.0 / vol {
                    break;
                }
                any_range = true;
                if inv[ti].is_none() {
                    let row = xs
                        .iter()
                        .map(|x| {
                            left_inverse_unchecked(
                                phi,
                                x,
                                t,
                                1e-10 * t.max(1.0),
                                DEFAULT_INVERSE_T_MAX,
                            )
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    inv[ti] = Some(row);
                }
                let row = inv[ti].as_ref().expect("filled above");
                let (mut imin, mut imax) = (members[0], members[0]);
                for &i in &members {
                    if row[i] < row[imin] {
                        imin = i;
                    }
                    if row[i] > row[imax] {
                        imax = i;
                    }
                }
                let ratio = if row[imax].is_infinite() {
                    if row[imin].is_infinite() {
                        1.0
                    } else {
                        0.0
                    }
                } else if row[imax] == 0.0 {
                    1.0
                } else {
                    row[imin] / row[imax]
                };
                if ratio < beta_emp {
                    beta_emp = ratio;
                    witness = Some((xs[imin].clone(), xs[imax].clone(), t));
                }
            }
        }
    }
    if !any_range {
        return Ok((Verdict::Indeterminate, Witness::None));
    }
    if beta_emp >= samples.a1_min_beta {
        Ok((
            Verdict::Pass,
            Witness::Beta {
                beta: beta_emp.min(1.0),
            },
        ))
    } else {
        let (x, y, t) = witness.expect("finite ratio has a witness");
        Ok((
            Verdict::Fail,
            Witness::Counterexample {
                x,
                t,
                s: None,
                detail: format!("left-inverse ratio {beta_emp:e} against y = {y:?}"),
            },
        ))
    }
}

/// Check `ψ(x, t/L) <= φ(x, t) <= ψ(x, L t)` on the sample.
pub fn check_equivalence(
    phi: &PhiFunction,
    psi: &PhiFunction,
    l: f64,
    samples: &SampleSpec,
) -> Result<ConditionReport> {
    if !(l >= 1.0 && l.is_finite()) {
        return input(format!(
            "equivalence constant must be finite and >= 1, got {l}"
        ));
    }
    if phi.domain.dim() != psi.domain.dim() {
        return input("integrands live in different dimensions");
    }
    let mut spec = samples.clone();
    for h in psi.singular_hyperplanes() {
        if !spec.focus.contains(&h) {
            spec.focus.push(h);
        }
    }
    let xs = spec.x_points(&phi.domain);
    let ts = spec.t_points();
    let le = |a: f64, b: f64| a <= b || a <= b * (1.0 + 1e-12) + 1e-300;
    let mut result = (Verdict::Pass, Witness::Constant { l });
    'outer: for x in &xs {
        for &t in &ts {
            let v = phi.value(x, t);
            let below = psi.value(x, t / l);
            let above = psi.value(x, l * t);
            let detail = if !le(below, v) {
                format!("ψ(x, t/L) = {below:e} > φ(x, t) = {v:e}")
            } else if !le(v, above) {
                format!("φ(x, t) = {v:e} > ψ(x, L t) = {above:e}")
            } else {
                continue;
            };
            result = (
                Verdict::Fail,
                Witness::Counterexample {
                    x: x.clone(),
                    t,
                    s: None,
                    detail,
                },
            );
            break 'outer;
        }
    }
    Ok(ConditionReport {
        condition: "equivalence".into(),
        verdict: result.0,
        witness: result.1,
        samples: spec,
        x_samples: xs.len(),
    })
}

/// Sampled check of the weak Φ-function axioms: `φ(x,0) = 0`, monotone in
/// `t`, `φ(x,t)/t` almost increasing with the declared `L`, unbounded in `t`.
pub fn validate_phi(phi: &PhiFunction, samples: &SampleSpec) -> Result<()> {
    let xs = samples.x_points(&phi.domain);
    let ts = samples.t_points();
    for x in &xs {
        let z = phi.value(x, 0.0);
        if z != 0.0 {
            return Err(Error::Integrity(format!("φ(x, 0) = {z} at x = {x:?}")));
        }
        let mut prev = 0.0;
        for &t in &ts {
            let v = phi.value(x, t);
            if v.is_nan() || v < prev {
                return Err(Error::Integrity(format!(
                    "φ not non-decreasing at x = {x:?}, t = {t}"
                )));
            }
            prev = v;
        }
        let mut t = 1.0;
        while phi.value(x, t) < 1e6 {
            t *= 16.0;
            if t > 1e300 {
                return Err(Error::Integrity(format!(
                    "φ(x, t) stays bounded at x = {x:?}"
                )));
            }
        }
    }
    let (l, _) = almost_monotone_constant(phi, &xs, &ts, 1.0, true);
    if l > phi.meta.l_const * (1.0 + 1e-9) {
        return Err(Error::Integrity(format!(
            "φ(x,t)/t has sampled almost-increasing constant {l} above the declared {}",
            phi.meta.l_const
        )));
    }
    Ok(())
}
