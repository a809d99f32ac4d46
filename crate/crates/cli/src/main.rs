//! `censorlap`: command-line front end for the regional fractional
//! Laplacian toolkit.
//!
//! Exit status: 0 on success, 1 when a check fails or a computation does
//! not converge, 2 on configuration errors.

mod commands;
mod config;
mod error;
mod params;

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use crate::config::ConfigFile;
use crate::error::CliError;
use crate::params::Params;

#[derive(Parser)]
#[command(name = "censorlap", version, about = "Regional fractional Laplacian toolkit")]
struct Cli {
    /// Flat key-value config file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory for JSON/CSV artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed recorded in every report and used by randomized checks.
    #[arg(long, global = true)]
    seed: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// γ(α,τ), c_α(τ), c_{N,α}, d_α and the exponent regime.
    Constants(ConstantsArgs),
    /// Pointwise operator value of a barrier or polynomial field.
    Opval(OpvalArgs),
    /// Boundary asymptotics of a barrier over decreasing distances.
    Sweep(SweepArgs),
    /// Killing density κ_α at a point.
    Kappa(KappaArgs),
    /// Collocation solve of the Dirichlet problem on an interval.
    Solve(SolveArgs),
    /// Refinement sweep of max u for the blow-up dichotomy.
    Blowup(BlowupArgs),
    /// Non-existence witness built from a solved candidate.
    Witness(WitnessArgs),
    /// Runs the full check suite.
    VerifyAll(VerifyArgs),
}

#[derive(Args, Serialize)]
struct ConstantsArgs {
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    /// Dimension used for c_{N,α} and d_α.
    #[arg(long)]
    dim: Option<String>,
    /// Emit a CSV sign table over an (α,τ) grid instead.
    #[arg(long)]
    table: bool,
}

#[derive(Args, Serialize)]
struct OpvalArgs {
    #[arg(long)]
    alpha: Option<String>,
    /// Domain literal, e.g. "{type: interval, a: 0, b: 1}".
    #[arg(long)]
    domain: Option<String>,
    /// vtau, vstar, w1 or poly:c0,c1,...
    #[arg(long)]
    function: Option<String>,
    /// Evaluation point, comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true)]
    at: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    /// Boundary layer width of barrier fields.
    #[arg(long)]
    delta: Option<String>,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    #[arg(long)]
    domain: Option<String>,
    /// Decreasing boundary distances.
    #[arg(long)]
    rhos: Option<String>,
    /// power, log or w1.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    delta: Option<String>,
}

#[derive(Args, Serialize)]
struct KappaArgs {
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    domain: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    at: Option<String>,
}

#[derive(Args, Serialize)]
struct SolveArgs {
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Source term: const:V or poly:c0,c1,...
    #[arg(long, allow_hyphen_values = true)]
    f: Option<String>,
    /// Boundary values at the left and right endpoints.
    #[arg(long, allow_hyphen_values = true)]
    h: Option<String>,
}

#[derive(Args, Serialize)]
struct BlowupArgs {
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    levels: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    f: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    h: Option<String>,
    /// Growth ratio every refinement must reach for divergence.
    #[arg(long)]
    divergence: Option<String>,
    /// Relative gap of the last two maxima allowed for convergence.
    #[arg(long)]
    cauchy: Option<String>,
}

#[derive(Args, Serialize)]
struct WitnessArgs {
    #[arg(long)]
    alpha: Option<String>,
    /// Grid size of the candidate solution.
    #[arg(long)]
    n: Option<String>,
    /// Lower bound of the source term.
    #[arg(long)]
    t0: Option<String>,
    /// Override the measured interior bound T₀.
    #[arg(long)]
    t_big: Option<String>,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    /// Subset of check numbers to run.
    #[arg(long)]
    checks: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    touch_fields: Option<String>,
    #[arg(long)]
    levels: Option<String>,
    #[arg(long)]
    divergence: Option<String>,
    #[arg(long)]
    cauchy: Option<String>,
}

/// What a command produced.
pub struct Output {
    pub result: Value,
    /// CSV artifact, if the command has one.
    pub csv: Option<String>,
    /// Print the CSV rather than the JSON report on stdout.
    pub csv_on_stdout: bool,
    /// `Some(reason)` when a check failed.
    pub failure: Option<String>,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'a str,
    version: &'static str,
    seed: u64,
    config: &'a BTreeMap<String, Value>,
    result: &'a Value,
}

pub const DEFAULT_SEED: u64 = 20240601;

fn flags_of<T: Serialize>(args: &T) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    if let Ok(Value::Object(map)) = serde_json::to_value(args) {
        for (k, v) in map {
            match v {
                Value::String(s) => {
                    out.insert(k, s);
                }
                Value::Bool(true) => {
                    out.insert(k, "true".into());
                }
                _ => {}
            }
        }
    }
    out
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("CENSORLAP_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
        CliError::Config {
            location: "CENSORLAP_THREADS".into(),
            message: format!("expected a positive integer, got '{raw}'"),
        }
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config {
            location: "CENSORLAP_THREADS".into(),
            message: e.to_string(),
        })
}

fn write_artifact(dir: &std::path::Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::create_dir_all(dir)
        .and_then(|_| std::fs::write(&path, contents))
        .map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })
}

fn run(cli: Cli) -> Result<i32, CliError> {
    configure_threads()?;
    let file = cli.config.as_deref().map(ConfigFile::load).transpose()?;
    let (name, mut flags) = match &cli.command {
        Command::Constants(a) => ("constants", flags_of(a)),
        Command::Opval(a) => ("opval", flags_of(a)),
        Command::Sweep(a) => ("sweep", flags_of(a)),
        Command::Kappa(a) => ("kappa", flags_of(a)),
        Command::Solve(a) => ("solve", flags_of(a)),
        Command::Blowup(a) => ("blowup", flags_of(a)),
        Command::Witness(a) => ("witness", flags_of(a)),
        Command::VerifyAll(a) => ("verify-all", flags_of(a)),
    };
    if let Some(seed) = &cli.seed {
        flags.insert("seed".into(), seed.clone());
    }
    let mut params = Params::new(name, flags, file.as_ref());
    let seed: u64 = params.get("seed", DEFAULT_SEED)?;
    let out_dir = cli.out.clone().or_else(|| {
        file.as_ref()
            .and_then(|f| f.lookup(&name.replace('-', "_"), "out"))
            .map(|e| PathBuf::from(&e.value))
    });

    let output = match name {
        "constants" => commands::constants(&mut params)?,
        "opval" => commands::opval(&mut params)?,
        "sweep" => commands::sweep(&mut params)?,
        "kappa" => commands::kappa(&mut params)?,
        "solve" => commands::solve(&mut params)?,
        "blowup" => commands::blowup(&mut params)?,
        "witness" => commands::witness(&mut params)?,
        _ => commands::verify_all(&mut params, seed)?,
    };

    let report = Report {
        command: name,
        version: censorlap::VERSION,
        seed,
        config: params.resolved(),
        result: &output.result,
    };
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Serialize(e.to_string()))?
        + "\n";
    if let Some(dir) = &out_dir {
        write_artifact(dir, &format!("{name}.json"), &json)?;
        if let Some(csv) = &output.csv {
            write_artifact(dir, &format!("{name}.csv"), csv)?;
        }
    }
    match (&output.csv, output.csv_on_stdout) {
        (Some(csv), true) => print!("{csv}"),
        _ => print!("{json}"),
    }
    match output.failure {
        Some(reason) => {
            eprintln!("{}", CliError::Check(reason));
            Ok(1)
        }
        None => Ok(0),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = run(cli).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    std::process::exit(code);
}
