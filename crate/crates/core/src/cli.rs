//! Command-line front end.
//!
//! Exit status: 0 success, 1 certification failure, 2 input error,
//! 3 resource guard.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

use crate::cloner::{clone_state, single_particle_fidelity, two_step_estimate};
use crate::error::{Error, Result};
use crate::estimation::{mean_fidelity_exact, mean_fidelity_mc, optimal_fidelity, sample_outcomes, Estimator};
use crate::moments::{all_indices, format_rational, moment_value, MomentIndex};
use crate::povm::{build_povm, check_completeness, check_optimality, check_universality, load_povm, save_povm, BuildOptions, Povm};
use crate::quadrature::CERTIFY_TOL;
use crate::symmetric::{full_space_guard, haar_random_state, PureState};

#[derive(Debug, Parser)]
#[command(name = "optimal-povm", version, about = "Build, verify and run finite optimal POVMs for pure-state estimation")]
pub struct Cli {
    /// Worker threads for Monte Carlo and Gram accumulation (results do not
    /// depend on this).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Construct a POVM from an exact sphere quadrature and certify it.
    Build(BuildArgs),
    /// Re-check a saved POVM file.
    Verify(VerifyArgs),
    /// Analytic and Monte Carlo mean fidelities, for one file or a sweep.
    Fidelity(FidelityArgs),
    /// Simulate a measurement record for one input state.
    Simulate(SimulateArgs),
    /// Optimal cloner: single-particle and clone-then-estimate fidelities.
    Clone(CloneArgs),
    /// Exact Haar moments of amplitude monomials.
    Moments(MomentsArgs),
}

#[derive(Debug, Args)]
pub struct Output {
    /// Emit machine-readable JSON instead of text.
    #[arg(long)]
    pub json: bool,
    /// Write the report to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long = "N", alias = "n")]
    pub n: usize,
    /// Merge grid points that describe the same ray.
    #[arg(long)]
    pub dedupe: bool,
    /// Where to write the POVM JSON.
    #[arg(long)]
    pub povm: Option<PathBuf>,
    #[arg(long, default_value_t = CERTIFY_TOL)]
    pub tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Completeness,
    Optimality,
    Universality,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub path: PathBuf,
    #[arg(long, value_enum, default_value_t = Level::Optimality)]
    pub level: Level,
    #[arg(long, default_value_t = CERTIFY_TOL)]
    pub tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct FidelityArgs {
    /// POVM file to evaluate.
    #[arg(long, conflicts_with = "sweep")]
    pub povm: Option<PathBuf>,
    /// Build and evaluate POVMs over the `--d` × `--N` grid.
    #[arg(long)]
    pub sweep: bool,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub d: Vec<usize>,
    #[arg(long = "N", alias = "n", value_delimiter = ',', default_value = "1,2,3,4")]
    pub n: Vec<usize>,
    /// Haar samples for the Monte Carlo column; 0 skips it.
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// RFC 4180 CSV with a header row.
    #[arg(long, conflicts_with = "json")]
    pub csv: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub path: PathBuf,
    /// `haar:<seed>`, `basis:<k>` (zero-based) or amplitudes
    /// `re,im;re,im;...`.
    #[arg(long)]
    pub state: String,
    #[arg(long)]
    pub shots: u64,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct CloneArgs {
    #[arg(long)]
    pub d: usize,
    #[arg(long = "N", alias = "n", default_value_t = 1)]
    pub n: usize,
    /// Target copy numbers.
    #[arg(long = "M", alias = "m", value_delimiter = ',', default_value = "1,2,3")]
    pub m: Vec<usize>,
    /// Number of Haar-random input states.
    #[arg(long, default_value_t = 5)]
    pub states: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, conflicts_with = "json")]
    pub csv: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[arg(long)]
    pub d: usize,
    /// One-based indices of the `c` factors, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub i: Option<String>,
    /// One-based indices of the `c*` factors, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub j: Option<String>,
    /// List every balanced moment with this many factor pairs.
    #[arg(long, conflicts_with_all = ["i", "j"])]
    pub all: Option<usize>,
    #[command(flatten)]
    pub output: Output,
}

/// Runs a parsed command, writing the primary report to `out` (or the
/// file named by `--out`). Returns the exit status.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidInput(e.to_string()))?;
            let mut buf = Vec::new();
            let code = pool.install(|| dispatch(cli.command, &mut buf))?;
            out.write_all(&buf)?;
            Ok(code)
        }
        None => dispatch(cli.command, out),
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Build(a) => cmd_build(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Fidelity(a) => cmd_fidelity(a, out),
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Clone(a) => cmd_clone(a, out),
        Command::Moments(a) => cmd_moments(a, out),
    }
}

fn emit(output: &Output, text: String, out: &mut dyn Write) -> Result<()> {
    match &output.out {
        Some(path) => std::fs::write(path, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct BuildReport {
    operation: &'static str,
    d: usize,
    #[serde(rename = "N")]
    n: usize,
    elements: usize,
    dedupe: bool,
    completeness: f64,
    optimality: f64,
    universality: f64,
    mean_fidelity: f64,
    optimal: String,
    certified: bool,
    povm: Option<String>,
}

pub fn cmd_build(args: BuildArgs, out: &mut dyn Write) -> Result<i32> {
    let povm = build_povm(
        args.d,
        args.n,
        BuildOptions {
            dedupe: args.dedupe,
            ..BuildOptions::default()
        },
    )?;
    if let Some(path) = &args.povm {
        save_povm(&povm, path)?;
    }
    let report = BuildReport {
        operation: "build",
        d: povm.d,
        n: povm.n,
        elements: povm.len(),
        dedupe: args.dedupe,
        completeness: check_completeness(&povm)?,
        optimality: check_optimality(&povm)?,
        universality: check_universality(&povm)?,
        mean_fidelity: mean_fidelity_exact(&povm)?.value,
        optimal: format_rational(&optimal_fidelity(povm.n, povm.d)?),
        certified: false,
        povm: args.povm.as_ref().map(|p| p.display().to_string()),
    };
    let certified = report.optimality <= args.tol && report.completeness <= povm.sym_dim() as f64 * args.tol;
    let report = BuildReport { certified, ..report };
    let text = if args.output.json {
        to_json(&report)
    } else {
        let mut s = String::new();
        writeln!(s, "POVM for d = {}, N = {}: {} elements{}", report.d, report.n, report.elements,
            if report.dedupe { " (deduplicated)" } else { "" }).unwrap();
        writeln!(s, "  completeness residual  {:.3e}", report.completeness).unwrap();
        writeln!(s, "  optimality residual    {:.3e}", report.optimality).unwrap();
        writeln!(s, "  universality residual  {:.3e}", report.universality).unwrap();
        writeln!(s, "  mean fidelity          {:.15} (optimal {})", report.mean_fidelity, report.optimal).unwrap();
        writeln!(s, "  certified              {}", if certified { "yes" } else { "NO" }).unwrap();
        if let Some(p) = &report.povm {
            writeln!(s, "  written to             {p}").unwrap();
        }
        s
    };
    emit(&args.output, text, out)?;
    Ok(if certified { 0 } else { 1 })
}

#[derive(Serialize)]
struct LevelResult {
    level: Level,
    residual: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    operation: &'static str,
    path: String,
    d: usize,
    #[serde(rename = "N")]
    n: usize,
    elements: usize,
    checks: Vec<LevelResult>,
}

pub fn cmd_verify(args: VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let povm = load_povm(&args.path)?;
    let levels: &[Level] = match args.level {
        Level::All => &[Level::Completeness, Level::Optimality, Level::Universality],
        ref l => std::slice::from_ref(l),
    };
    let mut checks = Vec::new();
    for &level in levels {
        let (residual, tolerance) = match level {
            Level::Completeness => (check_completeness(&povm)?, args.tol * povm.sym_dim() as f64),
            Level::Optimality => (check_optimality(&povm)?, args.tol),
            Level::Universality => (check_universality(&povm)?, args.tol),
            Level::All => unreachable!(),
        };
        checks.push(LevelResult {
            level,
            residual,
            tolerance,
            pass: residual <= tolerance,
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    let report = VerifyReport {
        operation: "verify",
        path: args.path.display().to_string(),
        d: povm.d,
        n: povm.n,
        elements: povm.len(),
        checks,
    };
    let text = if args.output.json {
        to_json(&report)
    } else {
        let mut s = format!("{} (d = {}, N = {}, {} elements)\n", report.path, report.d, report.n, report.elements);
        for c in &report.checks {
            writeln!(s, "  {:<13} {:.3e}  {}", format!("{:?}", c.level).to_lowercase(), c.residual,
                if c.pass { "pass" } else { "FAIL" }).unwrap();
        }
        s
    };
    emit(&args.output, text, out)?;
    Ok(if pass { 0 } else { 1 })
}

#[derive(Serialize)]
struct FidelityRow {
    d: usize,
    #[serde(rename = "N")]
    n: usize,
    analytic: f64,
    mc_estimate: Option<f64>,
    stderr: Option<f64>,
    optimal: String,
    samples: usize,
    seed: Option<u64>,
}

fn fidelity_row(povm: &Povm, samples: usize, seed: Option<u64>) -> Result<FidelityRow> {
    let analytic = mean_fidelity_exact(povm)?.value;
    let (mc, stderr) = if samples > 0 {
        let seed = seed.ok_or_else(|| Error::InvalidInput("--seed is required for Monte Carlo".into()))?;
        let r = mean_fidelity_mc(povm, samples, seed)?;
        (Some(r.value), Some(r.stderr))
    } else {
        (None, None)
    };
    Ok(FidelityRow {
        d: povm.d,
        n: povm.n,
        analytic,
        mc_estimate: mc,
        stderr,
        optimal: format_rational(&optimal_fidelity(povm.n, povm.d)?),
        samples,
        seed: if samples > 0 { seed } else { None },
    })
}

fn csv_text<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8"))
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.10}")).unwrap_or_else(|| "-".into())
}

pub fn cmd_fidelity(args: FidelityArgs, out: &mut dyn Write) -> Result<i32> {
    let mut rows = Vec::new();
    if let Some(path) = &args.povm {
        rows.push(fidelity_row(&load_povm(path)?, args.samples, args.seed)?);
    } else if args.sweep {
        for &d in &args.d {
            for &n in &args.n {
                let povm = build_povm(d, n, BuildOptions::default())?;
                rows.push(fidelity_row(&povm, args.samples, args.seed)?);
            }
        }
    } else {
        return Err(Error::InvalidInput("give either --povm <file> or --sweep".into()));
    }
    let text = if args.csv {
        csv_text(&rows)?
    } else if args.output.json {
        to_json(&rows)
    } else {
        let mut s = format!("{:>3} {:>3} {:>14} {:>14} {:>10} {:>8}\n", "d", "N", "analytic", "mc_estimate", "stderr", "optimal");
        for r in &rows {
            writeln!(s, "{:>3} {:>3} {:>14.10} {:>14} {:>10} {:>8}", r.d, r.n, r.analytic, opt(r.mc_estimate),
                r.stderr.map(|e| format!("{e:.2e}")).unwrap_or_else(|| "-".into()), r.optimal).unwrap();
        }
        s
    };
    emit(&args.output, text, out)?;
    Ok(0)
}

/// Parses the `--state` argument of `simulate`.
pub fn parse_state(spec: &str, d: usize) -> Result<PureState> {
    let bad = |m: String| Error::Parse {
        location: "--state".into(),
        message: m,
    };
    if let Some(seed) = spec.strip_prefix("haar:") {
        let seed = seed.trim().parse().map_err(|e| bad(format!("{e}")))?;
        return Ok(haar_random_state(d, seed));
    }
    if let Some(k) = spec.strip_prefix("basis:") {
        let k = k.trim().parse().map_err(|e| bad(format!("{e}")))?;
        return PureState::basis(d, k);
    }
    let amps = spec
        .split(';')
        .map(|pair| {
            let parts: Vec<&str> = pair.split(',').collect();
            if parts.len() != 2 {
                return Err(bad(format!("expected re,im but got {pair:?}")));
            }
            let re: f64 = parts[0].trim().parse().map_err(|e| bad(format!("{e}")))?;
            let im: f64 = parts[1].trim().parse().map_err(|e| bad(format!("{e}")))?;
            Ok(Complex64::new(re, im))
        })
        .collect::<Result<Vec<_>>>()?;
    if amps.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: amps.len(),
        });
    }
    PureState::normalized(amps)
}

#[derive(Serialize)]
struct SimulateReport {
    operation: &'static str,
    path: String,
    state: String,
    shots: u64,
    seed: u64,
    counts: Vec<u64>,
    probabilities: Vec<f64>,
    tv_distance: f64,
}

pub fn cmd_simulate(args: SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let povm = load_povm(&args.path)?;
    let state = parse_state(&args.state, povm.d)?;
    let counts = sample_outcomes(&povm, &state, args.shots, args.seed)?;
    let dist = povm.outcome_probs(&state)?;
    let report = SimulateReport {
        operation: "simulate",
        path: args.path.display().to_string(),
        state: args.state.clone(),
        shots: args.shots,
        seed: args.seed,
        tv_distance: dist.tv_distance(&counts),
        probabilities: dist.probs,
        counts,
    };
    let text = if args.output.json {
        to_json(&report)
    } else {
        let mut s = format!(
            "{} shots on {} (seed {}): TV distance to exact distribution {:.4e}\n",
            report.shots, report.state, report.seed, report.tv_distance
        );
        writeln!(s, "{:>6} {:>10} {:>12}", "a", "count", "p_a").unwrap();
        for (a, (c, p)) in report.counts.iter().zip(&report.probabilities).enumerate() {
            writeln!(s, "{a:>6} {c:>10} {p:>12.8}").unwrap();
        }
        s
    };
    emit(&args.output, text, out)?;
    Ok(0)
}

#[derive(Serialize)]
struct CloneRow {
    d: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    state: usize,
    single_particle: f64,
    two_step: f64,
    optimal: f64,
}

pub fn cmd_clone(args: CloneArgs, out: &mut dyn Write) -> Result<i32> {
    let guard = full_space_guard();
    let optimal = crate::estimation::optimal_fidelity_f64(args.n, args.d)?;
    let states: Vec<PureState> = (0..args.states as u64)
        .map(|k| haar_random_state(args.d, args.seed.wrapping_add(k)))
        .collect();
    let mut rows = Vec::new();
    for &m in &args.m {
        let povm_m = build_povm(args.d, m, BuildOptions::default())?;
        for (k, s) in states.iter().enumerate() {
            let cloned = clone_state(s, args.n, m, guard)?;
            rows.push(CloneRow {
                d: args.d,
                n: args.n,
                m,
                state: k,
                single_particle: single_particle_fidelity(&cloned, s)?,
                two_step: two_step_estimate(s, args.n, &povm_m, guard)?.pipeline,
                optimal,
            });
        }
    }
    let text = if args.csv {
        csv_text(&rows)?
    } else if args.output.json {
        to_json(&rows)
    } else {
        let mut s = format!("{:>3} {:>3} {:>3} {:>5} {:>16} {:>16} {:>10}\n", "d", "N", "M", "state", "single_particle", "two_step", "optimal");
        for r in &rows {
            writeln!(s, "{:>3} {:>3} {:>3} {:>5} {:>16.12} {:>16.12} {:>10.8}", r.d, r.n, r.m, r.state, r.single_particle, r.two_step, r.optimal).unwrap();
        }
        s
    };
    emit(&args.output, text, out)?;
    Ok(0)
}

#[derive(Serialize)]
struct MomentRow {
    d: usize,
    i: Vec<usize>,
    j: Vec<usize>,
    value: String,
}

pub fn cmd_moments(args: MomentsArgs, out: &mut dyn Write) -> Result<i32> {
    let indices = match (&args.all, &args.i, &args.j) {
        (Some(l), _, _) => all_indices(args.d, *l),
        (None, i, j) => vec![MomentIndex::parse(i.as_deref().unwrap_or(""), j.as_deref().unwrap_or(""))?],
    };
    let rows = indices
        .into_iter()
        .map(|idx| {
            let value = format_rational(&moment_value(args.d, &idx)?);
            Ok(MomentRow {
                d: args.d,
                i: idx.i,
                j: idx.j,
                value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let text = if args.output.json {
        to_json(&rows)
    } else {
        let join = |v: &[usize]| v.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",");
        rows.iter()
            .map(|r| format!("i=({}) j=({}) {}\n", join(&r.i), join(&r.j), r.value))
            .collect()
    };
    emit(&args.output, text, out)?;
    Ok(0)
}
