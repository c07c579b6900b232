//! `regiospec` command-line interface.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage error,
//! 3 numeric failure.

mod eval;
mod spectrum;
mod sweep;
mod verify;

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use regiospec::{Domain64, Error};

/// Worker cap for the thread pool.
const THREADS_ENV: &str = "REGIOSPEC_THREADS";

#[derive(Parser)]
#[command(name = "regiospec", version, about = "Regional fractional and logarithmic Laplacians: evaluation, spectra and s-sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an operator at a point.
    Eval(eval::EvalArgs),
    /// Lowest eigenpairs of the Galerkin eigenproblem.
    Spectrum(spectrum::SpectrumArgs),
    /// Spectra across a grid of orders with derivative and convergence verdicts.
    Sweep(sweep::SweepArgs),
    /// Run the built-in verification suites.
    Verify(verify::VerifyArgs),
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(Error),
    Verification(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Usage(_) => 2,
            // bad orders and grids are rejected flag values, not numeric breakdowns
            CliError::Numeric(
                Error::InvalidOrder(_) | Error::UnsupportedOrder(_) | Error::InsufficientGrid { .. },
            ) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
        }
    }

    fn payload(&self) -> Value {
        match self {
            CliError::Usage(m) => json!({"error": "UsageError", "message": m}),
            CliError::Numeric(e) => json!({"error": e.name(), "message": e.to_string()}),
            CliError::Verification(m) => json!({"error": "VerificationFailed", "message": m}),
            CliError::Io(m) => json!({"error": "IoError", "message": m}),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(m) => CliError::Usage(m),
            other => CliError::Numeric(other),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub fn parse_domain(text: &str) -> CliResult<Domain64> {
    Domain64::parse(text).map_err(|e| CliError::Usage(format!("--domain: {e}")))
}

pub fn parse_list(text: &str, flag: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("{flag}: cannot parse '{t}'"))))
        .collect()
}

/// Pretty JSON with a trailing newline.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json renders");
    s.push('\n');
    s
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn configure_threads() {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            // a second initialisation only fails if a pool already exists
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
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
    configure_threads();
    let result = match cli.command {
        Command::Eval(a) => eval::run(a),
        Command::Spectrum(a) => spectrum::run(a),
        Command::Sweep(a) => sweep::run(a),
        Command::Verify(a) => verify::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Verification(m) => eprintln!("verification failed: {m}"),
                other => eprint!("{}", render(&other.payload())),
            }
            ExitCode::from(e.code())
        }
    }
}
