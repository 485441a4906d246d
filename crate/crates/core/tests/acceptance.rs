//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

mod common;

use std::time::Instant;

use common::{corpus, discrete_lp, families, orders, trapezoid, unit};
use orlicz_core::acsob::{
    acc_check, acl_check, fuglede_subsequence, gradient, AccOptions, AccVerdict, FugledeOptions,
    JumpOptions,
};
use orlicz_core::curve::{curve_integral, curves_meeting_set, parallel_family, segment_family};
use orlicz_core::field::{holder_check, luxemburg_norm, modular, HolderOptions};
use orlicz_core::generate::FieldSpec;
use orlicz_core::modulus::{
    estimate_modulus_modular, estimate_modulus_norm, modulus_properties_suite,
    verify_exceptional_witness, DivergenceThresholds, NestedPair, WitnessedFamily,
};
use orlicz_core::phi::{check_condition, AffineField, OrliczProfile, Witness};
use orlicz_core::{
    BoxDomain, BoxGrid, Condition, Curve, CurveFamily, FieldKind, ModulusOptions, NormOptions,
    PhiDescriptor, PhiFunction, Result, SampleSpec, ScalarField, Verdict,
};

type Outcome = Result<(bool, String)>;
type Criterion = (&'static str, fn() -> Outcome);

fn window() -> BoxDomain {
    BoxDomain::new(vec![-1.0, 0.0], vec![1.0, 1.0]).unwrap()
}

/// Norm of a constant density `c` under the ramp on a unit-area box:
/// `ρ(c/λ) = max(c/λ - 1, 0)`, so the smallest feasible `λ` is `c/2`.
/// Admissibility on unit-length curves needs `c ≥ 1`.
fn ramp_constant_density_oracle() -> f64 {
    (0..=1000)
        .map(|k| 1.0 + k as f64 * 0.01)
        .map(|c| {
            let mut lo = 0.0f64;
            let mut hi = c;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if (c / mid - 1.0).max(0.0) <= 1.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            hi
        })
        .fold(f64::INFINITY, f64::min)
}

fn criterion_1() -> Outcome {
    let grid = BoxGrid::unit_square(129);
    let phi = PhiFunction::ramp(unit(2));
    let one = ScalarField::constant(grid.clone(), 1.0)?;
    let rho = modular(&phi, &one)?;
    let fam = segment_family(1, 257, grid.domain())?;
    let opts = ModulusOptions::default();
    let mt = estimate_modulus_modular(&phi, &fam, &grid, &opts)?;
    let mn = estimate_modulus_norm(&phi, &fam, &grid, &opts)?;
    let oracle = ramp_constant_density_oracle();
    let ok = rho == 0.0
        && mt.estimate <= 1e-3
        && (0.4..=0.6).contains(&mn.estimate)
        && mt.min_residual() >= -opts.tol_feas
        && (oracle - 0.5).abs() < 1e-9;
    Ok((
        ok,
        format!(
            "modular(1)={rho}, modular modulus={:.3e}, norm modulus={:.4} (oracle {oracle:.4})",
            mt.estimate, mn.estimate
        ),
    ))
}

fn criterion_2() -> Outcome {
    let coarse_g = BoxGrid::on(window(), vec![65, 33])?;
    let fine_g = coarse_g.refined();
    let step = FieldSpec::Step {
        axis: 0,
        center: 0.0,
        below: 0.0,
        at: 1.0,
        above: 2.0,
    };
    let (uc, uf) = (step.sample(&coarse_g)?, step.sample(&fine_g)?);
    let acl = acl_check(&uc, &uf, &JumpOptions::default())?;
    let horizontal = &acl.axes[0];
    let vertical = &acl.axes[1];
    let nac_h = horizontal.nac as f64 / horizontal.slices as f64;
    let ac_v = vertical.ac as f64 / vertical.slices as f64;

    let phi = PhiFunction::radial_gate(window());
    let inv = FieldSpec::InverseDistance {
        axis: 0,
        center: 0.0,
        scale: 1.0,
        power: 1.0,
    };
    let levels = vec![inv.sample(&coarse_g)?, inv.sample(&fine_g)?];
    let v = &levels[1];
    let rho = modular(&phi, v)?;
    let norm = luxemburg_norm(&phi, v, &NormOptions::default())?.value;

    let family =
        segment_family(1, 129, &window())?.union(&parallel_family([1.0, 1.0], 32, &window())?);
    let core = FieldSpec::HyperplaneMask {
        axis: 0,
        offset: 0.0,
    }
    .sample(&fine_g)?;
    let meeting = curves_meeting_set(&family, &core, 0.25 * coarse_g.min_spacing())?;
    let witness =
        verify_exceptional_witness(&levels, &meeting, &phi, &DivergenceThresholds::default())?;
    let acc = acc_check(
        &uc,
        &uf,
        &family,
        Some(&levels),
        &phi,
        &AccOptions::default(),
    )?;

    let ok = nac_h == 1.0
        && ac_v >= 0.99
        && rho == 0.0
        && (norm - 1.0).abs() <= 1e-2
        && !meeting.is_empty()
        && witness.certified
        && acc.verdict == AccVerdict::AccCertifiedAtScale;
    Ok((
        ok,
        format!(
            "NAC horizontal {:.1}%, AC vertical {:.1}%, modular(v)={rho}, |v|={norm:.6}, \
             meeting curves {} certified={}, acc {:?} ({} flagged)",
            100.0 * nac_h,
            100.0 * ac_v,
            meeting.len(),
            witness.certified,
            acc.verdict,
            acc.flagged.len()
        ),
    ))
}

fn criterion_3() -> Outcome {
    let grid = BoxGrid::unit_square(33);
    let fields = corpus(&grid);
    let mut worst_norm = 0.0f64;
    let mut worst_mod = 0.0f64;
    let opts = ModulusOptions::default();
    for p in [1.0, 2.0, 3.0] {
        let phi = PhiFunction::power(p, unit(2))?;
        for f in &fields {
            let n = luxemburg_norm(&phi, f, &NormOptions::default())?.value;
            worst_norm = worst_norm.max((n - discrete_lp(f, p)).abs());
        }
        for fam in families(grid.domain()) {
            let mt = estimate_modulus_modular(&phi, &fam, &grid, &opts)?.estimate;
            let mn = estimate_modulus_norm(&phi, &fam, &grid, &opts)?.estimate;
            worst_mod = worst_mod.max((mt - mn.powf(p)).abs());
        }
    }
    Ok((
        worst_norm <= 1e-6 && worst_mod <= 0.05,
        format!("max |norm - Lp| = {worst_norm:.2e} over 60 cases, max |M~ - M^p| = {worst_mod:.4} over 15"),
    ))
}

/// Jensen oracle for the dense vertical family under `t^2`: every column
/// average is at least 1, so the modular of an admissible density is at
/// least the total quadrature weight, which `u ≡ 1` attains.
fn vertical_oracle(grid: &BoxGrid) -> f64 {
    trapezoid(grid.lower(), grid.upper(), grid.counts())
        .iter()
        .sum()
}

fn criterion_4() -> Outcome {
    let phi = PhiFunction::power(2.0, unit(2))?;
    let opts = ModulusOptions::default();
    let mut rows = Vec::new();
    for m in [65usize, 129] {
        let grid = BoxGrid::unit_square(m);
        let fam = segment_family(1, 2 * m - 1, grid.domain())?;
        let a = estimate_modulus_modular(&phi, &fam, &grid, &opts)?.estimate;
        let b = estimate_modulus_norm(&phi, &fam, &grid, &opts)?.estimate;
        rows.push((m, a, b, vertical_oracle(&grid)));
    }
    let (_, a65, b65, _) = rows[0];
    let (_, a129, b129, oracle) = rows[1];
    let in_band = |x: f64| (0.9..=1.1).contains(&x);
    // Refinement must not move the estimates away from 1 beyond the
    // solver's outer tolerance.
    let slack = opts.outer_rel_tol;
    let toward = (a129 - 1.0).abs() <= (a65 - 1.0).abs() + slack
        && (b129 - 1.0).abs() <= (b65 - 1.0).abs() + slack;
    Ok((
        in_band(a129) && in_band(b129) && toward && (oracle - 1.0).abs() < 1e-12,
        format!("65^2: modular {a65:.4} norm {b65:.4}; 129^2: modular {a129:.4} norm {b129:.4}; oracle {oracle}"),
    ))
}

fn convex_phis(domain: &BoxDomain) -> Result<Vec<PhiFunction>> {
    Ok(vec![
        PhiFunction::power(1.5, domain.clone())?,
        PhiFunction::power(2.0, domain.clone())?,
        PhiFunction::power(3.0, domain.clone())?,
        PhiFunction::new(
            PhiDescriptor::Orlicz {
                profile: OrliczProfile::PowerLog { p: 2.0 },
            },
            domain.clone(),
        )?,
        PhiFunction::new(
            PhiDescriptor::DoublePhase {
                p: 2.0,
                q: 3.0,
                weight: AffineField {
                    offset: 0.0,
                    gradient: vec![1.0, 0.5],
                },
            },
            domain.clone(),
        )?,
    ])
}

fn criterion_5() -> Outcome {
    let grid = BoxGrid::unit_square(33);
    let fields = corpus(&grid);
    let opts = HolderOptions::default();
    let mut count = 0;
    let mut failures = 0;
    let mut worst_ratio = 0.0f64;
    for (k, phi) in convex_phis(&unit(2))?.iter().enumerate() {
        for j in 0..10 {
            let f = &fields[(2 * j + k) % fields.len()];
            let g = &fields[(3 * j + 2 * k + 1) % fields.len()];
            let r = holder_check(phi, f, g, &opts)?;
            count += 1;
            if !(r.lhs <= r.rhs + 1e-6) {
                failures += 1;
            }
            if r.rhs > 0.0 {
                worst_ratio = worst_ratio.max(r.lhs / r.rhs);
            }
        }
    }
    let one = ScalarField::constant(grid.clone(), 1.0)?;
    let eq = holder_check(&PhiFunction::power(2.0, unit(2))?, &one, &one, &opts)?;
    let gap = (eq.rhs - eq.lhs).abs();
    Ok((
        count == 50 && failures == 0 && gap <= 1e-3,
        format!("{count} triples, {failures} failures, max lhs/rhs {worst_ratio:.4}; equality gap {gap:.2e}"),
    ))
}

fn criterion_6() -> Outcome {
    let grid = BoxGrid::unit_square(33);
    let fields = corpus(&grid);
    let mut phis = convex_phis(&unit(2))?;
    phis.push(PhiFunction::power(1.0, unit(2))?);
    phis.push(PhiFunction::new(
        PhiDescriptor::VariableExponent {
            exponent: AffineField {
                offset: 1.5,
                gradient: vec![1.0, 0.0],
            },
        },
        unit(2),
    )?);
    let nopts = NormOptions::default();
    let (mut worst_ball, mut worst_hom) = (0.0f64, 0.0f64);
    let mut cases = 0;
    for phi in &phis {
        for f in &fields {
            let n = luxemburg_norm(phi, f, &nopts)?.value;
            if n == 0.0 || !n.is_finite() {
                continue;
            }
            worst_ball = worst_ball.max(modular(phi, &f.scaled(1.0 / n)?)? - 1.0);
            for c in [0.5, 3.0, 10.0] {
                let nc = luxemburg_norm(phi, &f.scaled(c)?, &nopts)?.value;
                worst_hom = worst_hom.max((nc - c * n).abs() / (c * n));
                cases += 1;
            }
        }
    }
    Ok((
        worst_ball <= 1e-6 && worst_hom <= 1e-6,
        format!("max rho(f/|f|) - 1 = {worst_ball:.2e}, max relative homogeneity error {worst_hom:.2e} over {cases}"),
    ))
}

fn line(axis_fixed: usize, at: f64) -> Curve {
    let (mut a, mut b) = (vec![0.0, 0.0], vec![1.0, 1.0]);
    a[axis_fixed] = at;
    b[axis_fixed] = at;
    Curve::segment(a, b).unwrap()
}

fn criterion_7() -> Outcome {
    let grid = BoxGrid::unit_square(33);
    let d = grid.domain().clone();
    let phi = PhiFunction::power(2.0, unit(2))?;
    let v17 = segment_family(1, 17, &d)?;
    let v9 = segment_family(1, 9, &d)?;
    let v5 = segment_family(1, 5, &d)?;
    let h9 = segment_family(0, 9, &d)?;
    let h17 = segment_family(0, 17, &d)?;
    let diag = parallel_family([1.0, 1.0], 16, &d)?;
    let even: Vec<usize> = (0..diag.len()).step_by(2).collect();
    let middle: Vec<usize> = (4..12).collect();
    let pairs = vec![
        NestedPair {
            small: v5.clone(),
            large: v9.clone(),
        },
        NestedPair {
            small: v9.clone(),
            large: v17.clone(),
        },
        NestedPair {
            small: v5.clone(),
            large: v17.clone(),
        },
        NestedPair {
            small: h9.clone(),
            large: h17.clone(),
        },
        NestedPair {
            small: v9.clone(),
            large: v9.union(&h9),
        },
        NestedPair {
            small: h9.clone(),
            large: v5.union(&h9),
        },
        NestedPair {
            small: diag.select(&even, "diag even"),
            large: diag.clone(),
        },
        NestedPair {
            small: diag.select(&middle, "diag middle"),
            large: diag.clone(),
        },
        NestedPair {
            small: v5.select(&[2], "v5 center"),
            large: v5.clone(),
        },
        NestedPair {
            small: diag.select(&[7, 8], "diag core"),
            large: diag.union(&v9),
        },
    ];
    let opts = ModulusOptions {
        iterations: 3000,
        ..ModulusOptions::default()
    };

    let wgrid = BoxGrid::unit_square(17);
    let levels = |axis: usize, center: f64| -> Result<Vec<ScalarField>> {
        let s = FieldSpec::InverseDistance {
            axis,
            center,
            scale: 1.0,
            power: 0.5,
        };
        Ok(vec![s.sample(&wgrid)?, s.sample(&wgrid.refined())?])
    };
    let wf = |curve: Curve, tag: &str, axis: usize, center: f64| -> Result<WitnessedFamily> {
        Ok(WitnessedFamily {
            family: CurveFamily::new(vec![curve], tag),
            witness: levels(axis, center)?,
        })
    };
    let a = wf(line(0, 0.5), "y=0.5", 0, 0.5)?;
    let b = wf(line(1, 0.25), "z=0.25", 1, 0.25)?;
    let c = wf(line(0, 0.25), "y=0.25", 0, 0.25)?;
    let unions = vec![(a.clone(), b.clone()), (a, c.clone()), (b, c)];
    let witness_phi = PhiFunction::power(1.0, unit(2))?;
    let rep = modulus_properties_suite(
        &phi,
        &pairs,
        &grid,
        &opts,
        &unions,
        &witness_phi,
        &DivergenceThresholds::default(),
        (opts.outer_rel_tol, 1e-3),
    )?;
    let mono_ok = rep.monotonicity.iter().filter(|m| m.holds).count();
    let union_ok = rep
        .unions
        .iter()
        .filter(|u| u.union_certified && u.sum_norm <= u.triangle_bound * (1.0 + 1e-9))
        .count();
    Ok((
        rep.holds() && mono_ok == 10 && union_ok == 3,
        format!("monotonicity {mono_ok}/10, union certification {union_ok}/3"),
    ))
}

fn criterion_8() -> Outcome {
    let grid = BoxGrid::on(window(), vec![129, 65])?;
    let phi = PhiFunction::power(2.0, window())?;
    let seq = (1..=64)
        .map(|i| {
            let i = i as f64;
            FieldSpec::Strip {
                axis: 0,
                center: 0.0,
                half_width: 0.5 / (i * i * i),
                height: i,
                null_core: true,
            }
            .sample(&grid)
        })
        .collect::<Result<Vec<_>>>()?;
    let family = segment_family(1, 129, &window())?;
    let core = family
        .curves
        .iter()
        .position(|c| c.vertices()[0][0] == 0.0)
        .expect("core segment");
    let rep = fuglede_subsequence(&phi, &seq, &family, &FugledeOptions::default())?;
    let geometric = !rep.selected.is_empty()
        && rep
            .selected
            .iter()
            .enumerate()
            .all(|(k, &i)| rep.norms[i - 1] <= 0.5f64.powi(k as i32 + 1));
    let late = rep.unflagged_max_integral.iter().skip(9).all(|v| *v < 1e-3);
    let cert = rep.certificate.as_ref();
    let cert_ok =
        cert.is_some_and(|c| c.m >= 1.0 && c.min_integral >= c.m && c.modulus_bound.is_finite());
    Ok((
        geometric && late && rep.decay_ok && rep.flagged == vec![core] && cert_ok,
        format!(
            "selected {} indices starting {:?}, decay_ok={}, flagged {:?} (core {core}), certificate {:?}",
            rep.selected.len(),
            &rep.selected[..rep.selected.len().min(4)],
            rep.decay_ok,
            rep.flagged,
            cert.map(|c| (c.m, c.modulus_bound))
        ),
    ))
}

fn criterion_9() -> Outcome {
    let beta_of = |phi: &PhiFunction| -> Result<Option<f64>> {
        let r = check_condition(phi, Condition::weak_a0(), &SampleSpec::for_phi(phi))?;
        Ok(match (r.verdict, r.witness) {
            (Verdict::Pass, Witness::Beta { beta }) => Some(beta),
            _ => None,
        })
    };
    let ramp = beta_of(&PhiFunction::ramp(window()))?;
    let mut powers = Vec::new();
    for p in [1.0, 2.0, 3.0] {
        powers.push(beta_of(&PhiFunction::power(p, window())?)?);
    }
    let gate = PhiFunction::radial_gate(window());
    let r = check_condition(&gate, Condition::weak_a0(), &SampleSpec::for_phi(&gate))?;
    let (gate_fails, refuted) = match (&r.verdict, &r.witness) {
        (Verdict::Fail, Witness::Refutations { refutations }) => {
            let cands = SampleSpec::for_phi(&gate).beta_candidates().len();
            let valid = refutations.iter().all(|w| {
                window().contains(&w.x, 0.0) && gate.value(&w.x, w.beta) < 1.0 && w.value < 1.0
            });
            (valid && refutations.len() == cands, refutations.len())
        }
        _ => (false, 0),
    };
    let close = |b: Option<f64>, t: f64| b.is_some_and(|b| (b - t).abs() <= 1e-6);
    Ok((
        close(ramp, 2.0) && powers.iter().all(|b| close(*b, 1.0)) && gate_fails,
        format!("ramp beta {ramp:?}, power beta {powers:?}, radial gate refuted at {refuted} candidates"),
    ))
}

fn criterion_10() -> Outcome {
    let sizes = [9usize, 17, 33, 65];
    let phi = PhiFunction::power(2.0, unit(2))?;
    let e2 = std::f64::consts::E * std::f64::consts::E;
    let exact_exp = ((e2 - 1.0) / 2.0).powi(2);
    let exact_sq = 28.0 / 45.0;
    let mut q_exp = Vec::new();
    let mut q_sq = Vec::new();
    let mut c_err = Vec::new();
    let mut g_err = Vec::new();
    let (a, b): ([f64; 2], [f64; 2]) = ([0.1, 0.2], [0.9, 0.7]);
    let len = ((b[0] - a[0]) * (b[0] - a[0]) + (b[1] - a[1]) * (b[1] - a[1])).sqrt();
    let slope = ((b[0] - a[0]) + (b[1] - a[1])) / len;
    let exact_line = ((b[0] + b[1]).exp() - (a[0] + a[1]).exp()) / slope;
    let gamma = Curve::segment(a.to_vec(), b.to_vec())?;
    for &m in &sizes {
        let grid = BoxGrid::unit_square(m);
        let fe = ScalarField::from_fn(grid.clone(), FieldKind::Nonneg, |x| (x[0] + x[1]).exp())?;
        let fs = ScalarField::from_fn(grid.clone(), FieldKind::Nonneg, |x| {
            x[0] * x[0] + x[1] * x[1]
        })?;
        q_exp.push((modular(&phi, &fe)? - exact_exp).abs());
        q_sq.push((modular(&phi, &fs)? - exact_sq).abs());
        c_err.push((curve_integral(&fe, &gamma, 0.5 * grid.min_spacing())? - exact_line).abs());
        let u = ScalarField::from_fn(grid.clone(), FieldKind::Signed, |x| {
            x[0].sin() * (2.0 * x[1]).exp()
        })?;
        let gr = gradient(&u)?;
        let mut worst = 0.0f64;
        for i in 0..grid.len() {
            let x = grid.node(i);
            let dx = x[0].cos() * (2.0 * x[1]).exp();
            let dy = 2.0 * x[0].sin() * (2.0 * x[1]).exp();
            worst = worst
                .max((gr.components[0].values()[i] - dx).abs())
                .max((gr.components[1].values()[i] - dy).abs());
        }
        g_err.push(worst);
    }
    let min = |v: &[f64]| orders(v).into_iter().fold(f64::INFINITY, f64::min);
    let (o1, o2, o3, o4) = (min(&q_exp), min(&q_sq), min(&c_err), min(&g_err));
    Ok((
        [o1, o2, o3, o4].iter().all(|o| *o >= 1.8),
        format!(
            "min orders: quadrature {o1:.3} / {o2:.3}, curve integral {o3:.3}, gradient {o4:.3}"
        ),
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("ramp separates the two moduli", criterion_1),
        ("step function and inverse-distance witness", criterion_2),
        ("p-power consistency", criterion_3),
        ("vertical-family modulus", criterion_4),
        ("Hoelder suite", criterion_5),
        ("unit ball and homogeneity", criterion_6),
        ("modulus structure suite", criterion_7),
        ("Fuglede demo", criterion_8),
        ("weakA0 survey", criterion_9),
        ("convergence orders", criterion_10),
    ];
    let filter: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.contains(&(k + 1)) {
            continue;
        }
        let t = Instant::now();
        let (ok, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = t.elapsed().as_secs_f64();
        println!(
            "{} criterion {:>2} ({name}): {detail} [{secs:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            k + 1
        );
        if !ok {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
