// Guards are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod run;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use procten::Scheme;

use config::SchemaError;

#[derive(Parser, Debug)]
#[command(
    name = "procten",
    version,
    about = "Influence-network dynamics of a system in a Gaussian bath"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory, overriding `output.directory`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_parser = parse_scheme)]
    scheme: Option<Scheme>,

    #[arg(long = "lambda-c", global = true)]
    lambda_c: Option<f64>,

    #[arg(long, global = true)]
    k: Option<usize>,

    #[arg(long, global = true)]
    dt: Option<f64>,

    /// `path=value` with a dotted path into the configuration, e.g.
    /// `bath.alpha=0.3`. Values are read as JSON, falling back to strings.
    #[arg(long = "override", global = true, value_parser = parse_override)]
    overrides: Vec<(String, String)>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Density-matrix trajectory.
    Evolve,
    /// Two-time correlation `⟨σ⁺(t + τ) σ(t)⟩` for each policy.
    Correlate,
    /// Emission spectrum for each policy.
    Spectrum,
    /// Timing of both contraction schemes.
    Benchmark,
    /// Oracle comparisons at desk scale.
    Validate,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: procten::Error| e.to_string())
}

fn parse_override(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected path=value, got {s:?}"))?;
    Ok((k.trim().to_string(), v.to_string()))
}

/// Failure of a subcommand, mapped onto the process exit code.
pub enum Failure {
    Schema(SchemaError),
    Run(procten::Error),
    Validation(usize),
}

impl From<SchemaError> for Failure {
    fn from(e: SchemaError) -> Self {
        Failure::Schema(e)
    }
}

impl From<procten::Error> for Failure {
    fn from(e: procten::Error) -> Self {
        Failure::Run(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Run(e.into())
    }
}

fn overrides(cli: &Cli) -> Vec<(String, String)> {
    let mut out = Vec::new();
    if let Some(s) = cli.scheme {
        out.push(("solver.scheme".into(), format!("\"{}\"", s.name())));
    }
    if let Some(l) = cli.lambda_c {
        out.push(("solver.lambda_c".into(), l.to_string()));
    }
    if let Some(k) = cli.k {
        out.push(("grid.k".into(), k.to_string()));
    }
    if let Some(dt) = cli.dt {
        out.push(("grid.dt".into(), dt.to_string()));
    }
    if let Some(dir) = &cli.out {
        let dir = serde_json::to_string(&dir.to_string_lossy()).expect("string serializes");
        out.push(("output.directory".into(), dir));
    }
    out.extend(cli.overrides.iter().cloned());
    out
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    if cli.command == Command::Validate && cli.config.is_none() {
        return validate::run(None);
    }
    let path = cli.config.as_ref().ok_or_else(|| SchemaError {
        path: String::new(),
        message: "--config is required".into(),
    })?;
    let text = std::fs::read_to_string(path).map_err(|e| SchemaError {
        path: String::new(),
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let cfg = config::parse(&text, &overrides(cli))?;
    match cli.command {
        Command::Evolve => run::evolve(&cfg),
        Command::Correlate => run::correlate(&cfg, false),
        Command::Spectrum => run::correlate(&cfg, true),
        Command::Benchmark => run::benchmark(&cfg),
        Command::Validate => validate::run(Some(&cfg)),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    procten::tensor::set_linalg_threads(1);
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Schema(e)) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) if e.is_numeric() => {
            eprintln!("numeric failure: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            match e {
                procten::Error::Io(_) | procten::Error::Format(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
        Err(Failure::Validation(n)) => {
            eprintln!("{n} validation check(s) failed");
            ExitCode::from(1)
        }
    }
}
