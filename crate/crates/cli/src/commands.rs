//! Command dispatch. Every command reads a config; `verify` runs a suite and
//! writes reports, the others print JSON to stdout.

use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use nilspherical::freegroup::{canonicalize_skew, skew_from_coords, GroupElement};
use nilspherical::spectrum::{decrease_certificate, eval_spherical, Averaging, DLambda, SpectralGrid, SpectrumFunction, SphericalPoint};
use nilspherical::transform::{calibrate_c, forward_transform, inverse_transform, plancherel_defect, TransformSpectrum};
use nilspherical::Complex64;
use serde_json::{json, Value};

use crate::checks::{resolve_suite, run_check, Context};
use crate::config::{parse_config, ConfigError, Loaded, RunConfig};
use crate::report::{format_number, preflight, SuiteReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Describe the slice and canonicalize `skew` when given.
    Canon,
    /// Evaluate the spherical function at `spectral` and `point`.
    Eval,
    /// Forward transform of every catalog function at `spectral`.
    Transform,
    /// Invert every invariant catalog function at `point`.
    Invert,
    /// Plancherel defect of every invariant catalog function.
    Plancherel,
    /// Rapid-decrease certificate of every invariant catalog function.
    Certify,
    /// Inversion constant from every invariant catalog function.
    Calibrate,
    /// Run a verification suite and write the reports.
    Verify,
}

#[derive(Debug, Parser)]
#[command(name = "nilspherical", about = "Spherical analysis on the free two-step nilpotent group")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    #[command(flatten)]
    Run(RunArgsCommand),
}

#[derive(Debug, Subcommand)]
pub enum RunArgsCommand {
    /// Describe the slice and canonicalize `skew` when given.
    Canon(RunArgs),
    /// Evaluate the spherical function at `spectral` and `point`.
    Eval(RunArgs),
    /// Forward transform of every catalog function at `spectral`.
    Transform(RunArgs),
    /// Invert every invariant catalog function at `point`.
    Invert(RunArgs),
    /// Plancherel defect of every invariant catalog function.
    Plancherel(RunArgs),
    /// Rapid-decrease certificate of every invariant catalog function.
    Certify(RunArgs),
    /// Inversion constant from every invariant catalog function.
    Calibrate(RunArgs),
    /// Run a verification suite and write the reports.
    Verify(RunArgs),
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// Path to the TOML configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `suite`.
    #[arg(long)]
    pub suite: Option<String>,
}

impl RunArgsCommand {
    fn split(self) -> (Command, RunArgs) {
        match self {
            RunArgsCommand::Canon(a) => (Command::Canon, a),
            RunArgsCommand::Eval(a) => (Command::Eval, a),
            RunArgsCommand::Transform(a) => (Command::Transform, a),
            RunArgsCommand::Invert(a) => (Command::Invert, a),
            RunArgsCommand::Plancherel(a) => (Command::Plancherel, a),
            RunArgsCommand::Certify(a) => (Command::Certify, a),
            RunArgsCommand::Calibrate(a) => (Command::Calibrate, a),
            RunArgsCommand::Verify(a) => (Command::Verify, a),
        }
    }
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Load the config with command-line overrides applied.
pub fn load(args: &RunArgs) -> Result<Loaded, ConfigError> {
    if let Some(seed) = args.seed {
        if seed > i64::MAX as u64 {
            return Err(ConfigError(format!("--seed {seed} exceeds {}", i64::MAX)));
        }
    }
    let mut loaded = parse_config(&args.config, args.seed)?;
    if let Some(s) = &args.suite {
        resolve_suite(s)?;
        loaded.config.suite = s.clone();
    }
    if let Some(o) = &args.out {
        loaded.config.output.dir = o.to_string_lossy().into_owned();
    }
    Ok(loaded)
}

fn complex(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn spectral_point(c: &RunConfig) -> SphericalPoint {
    let sp = &c.spectral;
    if sp.lambda == 0.0 {
        SphericalPoint::Type2 { r: sp.r }
    } else {
        SphericalPoint::Type1 {
            r: sp.r,
            alpha: sp.alpha.clone(),
            lambda: sp.lambda,
        }
    }
}

fn group_point(c: &RunConfig) -> Result<GroupElement, String> {
    GroupElement::new(c.point.x.clone(), c.point.a.clone()).map_err(|e| e.to_string())
}

fn invariant(c: &RunConfig) -> Result<Vec<nilspherical::transform::InvariantTestFunction>, String> {
    let fs: Vec<_> = c.functions().into_iter().filter(|f| f.is_invariant()).collect();
    if fs.is_empty() {
        Err("the catalog has no invariant functions".into())
    } else {
        Ok(fs)
    }
}

fn compute(command: Command, c: &RunConfig) -> Result<(Value, bool), String> {
    let slice = c.slice();
    let quad = c.quadrature_spec();
    let e = |e: nilspherical::Error| e.to_string();
    Ok(match command {
        Command::Canon => {
            let mut v = json!({
                "n": slice.n,
                "mult": slice.blocks.mult,
                "mu_hat": slice.mu_hat,
                "xp_star": slice.xp_star,
                "p0": slice.p0(),
                "p1": slice.blocks.p1(),
                "a": slice.a(),
                "r_free": slice.r_is_free(),
            });
            if !c.skew.is_empty() {
                let f = canonicalize_skew(&skew_from_coords(c.n, &c.skew)).map_err(e)?;
                v["skew"] = json!({ "deltas": f.deltas, "mu": f.mu, "mult": f.mult, "p0": f.p0, "p1": f.p1 });
            }
            (v, true)
        }
        Command::Eval => {
            let v = eval_spherical(&spectral_point(c), &group_point(c)?, &slice, Averaging::ClosedForm).map_err(e)?;
            (json!({ "value": complex(v.value) }), true)
        }
        Command::Transform => {
            let p = spectral_point(c);
            let mut out = Vec::new();
            for f in c.functions() {
                out.push(complex(forward_transform(&f, &p, &slice, &quad).map_err(e)?));
            }
            (json!({ "values": out }), true)
        }
        Command::Invert => {
            let fs = invariant(c)?;
            let cc = calibrate_c(&fs[0], &slice, &quad).map_err(e)?;
            let x = group_point(c)?;
            let mut out = Vec::new();
            for f in fs {
                let g = TransformSpectrum::new(f.clone(), slice.clone());
                let inv = inverse_transform(g.as_ref(), &x, &slice, &quad, cc).map_err(e)?;
                out.push(json!({
                    "value": complex(inv.value),
                    "exact": complex(f.value(&x, &slice).map_err(e)?),
                    "gap": inv.gap,
                    "tail": inv.tail,
                    "truncation": inv.max_truncation,
                }));
            }
            (json!({ "c": cc, "results": out }), true)
        }
        Command::Plancherel => {
            let fs = invariant(c)?;
            let cc = calibrate_c(&fs[0], &slice, &quad).map_err(e)?;
            let mut out = Vec::new();
            for f in fs {
                let p = plancherel_defect(&f, &slice, &quad, cc).map_err(e)?;
                out.push(json!({ "lhs": p.lhs, "rhs": p.rhs, "defect": format_number(p.defect) }));
            }
            (json!({ "c": cc, "results": out }), true)
        }
        Command::Certify => {
            let grid = SpectralGrid {
                t: c.quadrature.truncation,
                ..SpectralGrid::default_for(&slice)
            };
            let mut out = Vec::new();
            let mut all = true;
            for f in invariant(c)? {
                let g: Arc<dyn SpectrumFunction> = TransformSpectrum::new(f, slice.clone());
                let rep = decrease_certificate(g, &slice, &grid, 2, 4, 2, DLambda::default()).map_err(e)?;
                all &= rep.pass();
                let entries: Vec<Value> = rep
                    .entries
                    .iter()
                    .map(|x| json!({ "label": x.label, "m": x.m, "n": x.n, "c": x.c, "pass": x.pass }))
                    .collect();
                out.push(json!({ "pass": rep.pass(), "entries": entries }));
            }
            (json!({ "results": out }), all)
        }
        Command::Calibrate => {
            let cs = invariant(c)?
                .iter()
                .map(|f| calibrate_c(f, &slice, &quad))
                .collect::<nilspherical::Result<Vec<f64>>>()
                .map_err(e)?;
            (json!({ "c": cs }), true)
        }
        Command::Verify => unreachable!("handled by verify"),
    })
}

/// Run the configured suite, write the reports and the echoed config.
pub fn verify(config: &RunConfig) -> Result<SuiteReport, String> {
    let checks = resolve_suite(&config.suite).map_err(|e| e.to_string())?;
    let ctx = Context {
        config,
        slice: config.slice(),
    };
    let results = checks.iter().map(|c| run_check(c, &ctx)).collect();
    Ok(SuiteReport {
        results,
        seed: config.seed,
        config_digest: config.digest(),
        record_timings: config.output.record_timings,
    })
}

/// Entry point shared by the binary; returns the process exit code.
pub fn main_with_args<I: IntoIterator<Item = String>>(args: I) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let Sub::Run(cmd) = cli.command;
    let (command, args) = cmd.split();
    let loaded = match load(&args) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let config = loaded.config;
    if command != Command::Verify {
        return match compute(command, &config) {
            Ok((v, ok)) => {
                println!("{}", serde_json::to_string_pretty(&v).expect("json"));
                if ok {
                    EXIT_PASS
                } else {
                    EXIT_FAIL
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_FAIL
            }
        };
    }
    let dir = config.out_dir();
    if let Err(e) = preflight(&dir) {
        eprintln!("config error: output directory {} is not writable: {e}", dir.display());
        return EXIT_CONFIG;
    }
    if let Err(e) = std::fs::write(dir.join("config.echo.toml"), config.echo()) {
        eprintln!("error: cannot write the echoed config: {e}");
        return EXIT_CONFIG;
    }
    let report = match verify(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    for r in &report.results {
        println!(
            "{} {} defect {} tolerance {} {}",
            r.status.as_str().to_uppercase(),
            r.name,
            format_number(r.defect),
            format_number(r.tolerance),
            r.detail
        );
    }
    println!("{} checks, config digest {}", report.results.len(), report.config_digest);
    if let Err(e) = report.emit(&dir, &config.output.format) {
        eprintln!("error: cannot write the report: {e}");
        return EXIT_FAIL;
    }
    report.exit_code()
}
