mod builtins;
mod run;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use orlicz_core::acsob::{acl_check, JumpOptions};
use orlicz_core::field::luxemburg_norm;
use orlicz_core::io::{read_curves, read_field};
use orlicz_core::modulus::{estimate_modulus_modular, estimate_modulus_norm};
use orlicz_core::phi::OrliczProfile;
use orlicz_core::{
    BoxDomain, BoxGrid, CurveFamily, ModulusOptions, NormOptions, PhiDescriptor, PhiFunction,
    ScalarField,
};
use serde_json::Value;

use scenario::{ModulusKind, Scenario};

#[derive(Parser)]
#[command(
    name = "orlicz-kit",
    version,
    about = "Discrete Musielak-Orlicz spaces, curve moduli and ACL diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file, or a builtin scenario by name.
    Run {
        config: String,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Also write the numeric report entries as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// List the builtin scenarios.
    List,
    /// Print the TOML of a builtin scenario.
    Show { name: String },
    /// Luxemburg norm of a field file.
    Norm {
        /// JSON, a TOML table, or shorthand such as `ramp`, `radial_gate`, `power:2`.
        #[arg(long)]
        phi: String,
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Modulus of a curve file on a grid.
    Modulus {
        #[arg(long)]
        phi: String,
        #[arg(long)]
        curves: PathBuf,
        /// `65x65`, or `65x33@-1:1,0:1` for a non-unit box.
        #[arg(long)]
        grid: String,
        #[arg(long, value_enum, default_value = "norm")]
        kind: ModulusKind,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// ACL diagnostics from a field and its refinement.
    Acl {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        field_fine: PathBuf,
    },
}

enum Failure {
    /// Exit code 2.
    Input(String),
    /// Exit code 1.
    Missed,
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = init_threads().and_then(|_| dispatch(cli.command));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Missed) => ExitCode::from(1),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("ORLICZ_KIT_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| {
        Failure::Input(format!(
            "ORLICZ_KIT_THREADS must be a positive integer, got {v:?}"
        ))
    })?;
    if n == 0 {
        return Err(Failure::Input(
            "ORLICZ_KIT_THREADS must be at least 1".into(),
        ));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()?;
    Ok(())
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run {
            config,
            report,
            csv,
        } => run_scenario(&config, report, csv),
        Command::List => {
            for b in builtins::BUILTINS {
                println!("{:<22} {}", b.name, b.description());
            }
            Ok(())
        }
        Command::Show { name } => {
            let b = builtins::find(&name)
                .ok_or_else(|| Failure::Input(format!("no builtin scenario {name:?}")))?;
            print!("{}", b.text);
            Ok(())
        }
        Command::Norm { phi, field, tol } => {
            let u = load_field(&field)?;
            let phi = parse_phi(&phi, u.grid().domain())?;
            let o = tol.map(NormOptions::with_tol).unwrap_or_default();
            print_json(&run::to_json(&luxemburg_norm(&phi, &u, &o)?))
        }
        Command::Modulus {
            phi,
            curves,
            grid,
            kind,
            iterations,
        } => {
            let grid = parse_grid(&grid)?;
            let phi = parse_phi(&phi, grid.domain())?;
            let fam = load_curves(&curves)?;
            let mut o = ModulusOptions::default();
            if let Some(n) = iterations {
                o.iterations = n;
            }
            let r = match kind {
                ModulusKind::Modular => estimate_modulus_modular(&phi, &fam, &grid, &o)?,
                ModulusKind::Norm => estimate_modulus_norm(&phi, &fam, &grid, &o)?,
            };
            let mut v = run::to_json(&r);
            v["curves"] = fam.len().into();
            print_json(&v)
        }
        Command::Acl { field, field_fine } => {
            let r = acl_check(
                &load_field(&field)?,
                &load_field(&field_fine)?,
                &JumpOptions::default(),
            )?;
            print_json(&run::acl_summary(&r))
        }
    }
}

fn print_json(v: &Value) -> Result<(), Failure> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_field(path: &Path) -> Result<ScalarField, Failure> {
    read_field(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load_curves(path: &Path) -> Result<CurveFamily, Failure> {
    let tag = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_curves(&read(path)?, tag).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn run_scenario(
    config: &str,
    report: Option<PathBuf>,
    csv: Option<PathBuf>,
) -> Result<(), Failure> {
    let path = Path::new(config);
    let (text, base) = if path.is_file() {
        (
            read(path)?,
            path.parent().map(Path::to_path_buf).unwrap_or_default(),
        )
    } else if let Some(b) = builtins::find(config) {
        (b.text.to_string(), PathBuf::from("."))
    } else {
        return Err(Failure::Input(format!(
            "{config}: no such file or builtin scenario (see `orlicz-kit list`)"
        )));
    };
    let sc = Scenario::parse(&text, &base).map_err(|d| Failure::Input(format!("{config}: {d}")))?;
    let rep = run::run(&sc).map_err(|d| Failure::Input(format!("{config}: {d}")))?;

    let json = serde_json::to_string_pretty(&rep)?;
    match report.or_else(|| sc.output.report.as_ref().map(|p| base.join(p))) {
        Some(p) => std::fs::write(&p, json + "\n")
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", p.display())))?,
        None => println!("{json}"),
    }
    if let Some(p) = csv.or_else(|| sc.output.csv.as_ref().map(|p| base.join(p))) {
        std::fs::write(&p, run::csv_rows(&rep)?)
            .map_err(|e| Failure::Input(format!("cannot write {}: {e}", p.display())))?;
    }

    for s in &rep.stages {
        let ok = s.expectations.iter().all(|e| e.ok);
        eprintln!(
            "stage {} {} ({}): {}",
            s.index,
            s.op,
            s.label,
            if ok { "ok" } else { "MISSED" }
        );
    }
    if rep.passed {
        eprintln!(
            "{}: {} stages, all expectations met",
            rep.scenario,
            rep.stages.len()
        );
        Ok(())
    } else {
        eprintln!(
            "{}: {} missed expectations",
            rep.scenario,
            rep.failures.len()
        );
        for f in &rep.failures {
            eprintln!("  {f}");
        }
        Err(Failure::Missed)
    }
}

/// JSON object, TOML table body or inline table, or `name[:parameter]`.
fn parse_phi(s: &str, domain: &BoxDomain) -> Result<PhiFunction, Failure> {
    let s = s.trim();
    let d = if let Ok(d) = serde_json::from_str::<PhiDescriptor>(s) {
        d
    } else if let Ok(d) = toml::from_str::<PhiDescriptor>(s) {
        d
    } else if s.starts_with('{') {
        #[derive(serde::Deserialize)]
        struct Wrap {
            phi: PhiDescriptor,
        }
        toml::from_str::<Wrap>(&format!("phi = {s}"))
            .map_err(|e| Failure::Input(format!("--phi: {}", e.message())))?
            .phi
    } else {
        shorthand(s)?
    };
    Ok(PhiFunction::new(d, domain.clone())?)
}

fn shorthand(s: &str) -> Result<PhiDescriptor, Failure> {
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n, Some(a)),
        None => (s, None),
    };
    let num = |what: &str| -> Result<f64, Failure> {
        arg.ok_or_else(|| Failure::Input(format!("--phi {name} needs a parameter, e.g. {name}:2")))?
            .parse()
            .map_err(|_| Failure::Input(format!("--phi: bad {what} in {s:?}")))
    };
    Ok(match name {
        "ramp" => PhiDescriptor::Ramp,
        "radial_gate" => PhiDescriptor::RadialGate { axis: 0, center: 0.0 },
        "power" => PhiDescriptor::Power { p: num("exponent")? },
        "power_log" => PhiDescriptor::Orlicz { profile: OrliczProfile::PowerLog { p: num("exponent")? } },
        "exponential" => PhiDescriptor::Orlicz { profile: OrliczProfile::Exponential },
        _ => {
            return Err(Failure::Input(format!(
                "--phi {s:?} is neither JSON, TOML nor one of ramp, radial_gate, power:P, power_log:P, exponential"
            )))
        }
    })
}

/// `65x33`, optionally followed by `@lo:hi,lo:hi`.
fn parse_grid(s: &str) -> Result<BoxGrid, Failure> {
    let bad = || {
        Failure::Input(format!(
            "--grid {s:?}: expected e.g. 65x65 or 65x33@-1:1,0:1"
        ))
    };
    let (counts, bounds) = match s.split_once('@') {
        Some((c, b)) => (c, Some(b)),
        None => (s, None),
    };
    let counts: Vec<usize> = counts
        .split('x')
        .map(|c| c.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let domain = match bounds {
        None => BoxDomain::unit(counts.len()),
        Some(b) => {
            let mut lower = Vec::new();
            let mut upper = Vec::new();
            for part in b.split(',') {
                let (lo, hi) = part.split_once(':').ok_or_else(bad)?;
                lower.push(lo.trim().parse().map_err(|_| bad())?);
                upper.push(hi.trim().parse().map_err(|_| bad())?);
            }
            BoxDomain::new(lower, upper)?
        }
    };
    Ok(BoxGrid::on(domain, counts)?)
}
