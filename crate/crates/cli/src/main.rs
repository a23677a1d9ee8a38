//! `orlicz-moser`: runs one experiment per subcommand and writes `<name>.csv` and
//! `<name>.json` into the output directory.
//!
//! Exit codes: 0 success, 2 bad input or failed precondition, 3 numerical
//! failure, 4 I/O error.

mod commands;
mod report;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use std::path::PathBuf;
use std::process::ExitCode;

use commands::*;

/// Environment variable that overrides the configured output directory.
pub const OUT_ENV: &str = "ORLICZ_MOSER_OUT";
const DEFAULT_OUT: &str = "orlicz-moser-out";

#[derive(Parser, Debug)]
#[command(name = "orlicz-moser", version, about = "Φ_m Young functions, Moser recurrences and degenerate Orlicz-Sobolev experiments")]
struct Cli {
    /// JSON file with the subcommand's parameters (same keys as the flags, plus "out").
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; beats the environment variable and the config file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Young-function identities and submultiplicativity.
    #[command(subcommand)]
    Young(YoungCmd),
    /// Iterate test functions h_{j,β}.
    #[command(subcommand)]
    Iterates(IteratesCmd),
    /// The recurrence b_{n+1} = Φ(K n^γ b_n).
    #[command(subcommand)]
    Recurrence(RecurrenceCmd),
    /// Metric balls and cutoff functions.
    #[command(subcommand)]
    Metric(MetricCmd),
    /// Orlicz-Sobolev quotients.
    #[command(subcommand)]
    Sobolev(SobolevCmd),
    /// Elliptic solve and the regularity diagnostics on its solution.
    #[command(subcommand)]
    Solver(SolverCmd),
}

#[derive(Subcommand, Debug)]
enum YoungCmd {
    Check(YoungArgs),
}

#[derive(Subcommand, Debug)]
enum IteratesCmd {
    Envelope(EnvelopeArgs),
}

#[derive(Subcommand, Debug)]
enum RecurrenceCmd {
    Run(RecurrenceArgs),
    Failure(FailureDemoArgs),
}

#[derive(Subcommand, Debug)]
enum MetricCmd {
    Profile(ProfileArgs),
    Cutoffs(CutoffArgs),
}

#[derive(Subcommand, Debug)]
enum SobolevCmd {
    Failure(SobolevFailureArgs),
    Ratio(SobolevRatioArgs),
}

#[derive(Subcommand, Debug)]
enum SolverCmd {
    Run(SolverArgs),
}

#[derive(Debug)]
pub enum CliError {
    Core(orlicz_moser::Error),
    Config(String),
    Io(std::io::Error),
}

impl From<orlicz_moser::Error> for CliError {
    fn from(e: orlicz_moser::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_precondition() => 2,
            CliError::Core(_) => 3,
            CliError::Config(_) => 2,
            CliError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Config(s) => write!(f, "config error: {s}"),
            CliError::Io(e) => write!(f, "I/O error: {e}"),
        }
    }
}

/// Config values first, command-line flags on top; unknown keys are rejected.
fn merge<T: Serialize + DeserializeOwned>(cli: &T, config: &Map<String, Value>) -> Result<T, CliError> {
    let mut merged = config.clone();
    merged.remove("out");
    match serde_json::to_value(cli).map_err(|e| CliError::Config(e.to_string()))? {
        Value::Object(flags) => merged.extend(flags),
        _ => unreachable!("argument structs serialize to objects"),
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Config(e.to_string()))
}

fn load_config(path: &Option<PathBuf>) -> Result<Map<String, Value>, CliError> {
    let Some(p) = path else { return Ok(Map::new()) };
    let text = std::fs::read_to_string(p)?;
    match serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))? {
        Value::Object(m) => Ok(m),
        _ => Err(CliError::Config("config must be a JSON object".into())),
    }
}

fn out_dir(cli: &Option<PathBuf>, config: &Map<String, Value>) -> Result<PathBuf, CliError> {
    if let Some(p) = cli {
        return Ok(p.clone());
    }
    if let Some(p) = std::env::var_os(OUT_ENV) {
        return Ok(PathBuf::from(p));
    }
    match config.get("out") {
        Some(Value::String(s)) => Ok(PathBuf::from(s)),
        Some(_) => Err(CliError::Config("\"out\" must be a string".into())),
        None => Ok(PathBuf::from(DEFAULT_OUT)),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = load_config(&cli.config)?;
    let out = out_dir(&cli.out, &config)?;
    let report = match &cli.cmd {
        Cmd::Young(YoungCmd::Check(a)) => young_check(&merge(a, &config)?)?,
        Cmd::Iterates(IteratesCmd::Envelope(a)) => iterates_envelope(&merge(a, &config)?)?,
        Cmd::Recurrence(RecurrenceCmd::Run(a)) => recurrence_run(&merge(a, &config)?)?,
        Cmd::Recurrence(RecurrenceCmd::Failure(a)) => recurrence_failure(&merge(a, &config)?)?,
        Cmd::Metric(MetricCmd::Profile(a)) => metric_profile(&merge(a, &config)?)?,
        Cmd::Metric(MetricCmd::Cutoffs(a)) => metric_cutoffs(&merge(a, &config)?)?,
        Cmd::Sobolev(SobolevCmd::Failure(a)) => sobolev_failure(&merge(a, &config)?)?,
        Cmd::Sobolev(SobolevCmd::Ratio(a)) => sobolev_ratio(&merge(a, &config)?)?,
        Cmd::Solver(SolverCmd::Run(a)) => solver_run(&merge(a, &config)?)?,
    };
    report.emit(&out)?;
    println!("{}", serde_json::to_string_pretty(&report.summary()).expect("summary is valid JSON"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
