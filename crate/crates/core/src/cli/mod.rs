//! Command-line front end: job parsing, certificate emission and checking.

pub mod certificate;
pub mod job;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

pub use certificate::{run, verify, verify_certificate, Certificate, TailViolation, FORMAT};
pub use job::{build_job, parse_job, Job, JobKind, JobParams};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error at {path}: {reason}")]
    Parse { path: String, reason: String },
    #[error("validation failed ({invariant}): {detail}")]
    Validation { invariant: String, detail: String },
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Module(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn parse(path: impl ToString, reason: impl ToString) -> Self {
        CliError::Parse { path: path.to_string(), reason: reason.to_string() }
    }

    pub fn validation(invariant: impl ToString, detail: impl ToString) -> Self {
        CliError::Validation { invariant: invariant.to_string(), detail: detail.to_string() }
    }

    /// Errors always exit with 2; verdicts use 0 and 1.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

#[derive(Debug, Parser)]
#[command(name = "sb-kit", version, about = "Decide and certify embeddability between paired structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compare two self-adjoint operators given as symmetric matrices.
    Operators(PairArgs),
    /// Compare two spectral descriptions.
    Descriptions(PairArgs),
    /// Compare two Maharam invariants.
    Algebras(PairArgs),
    /// Build a conjugacy certificate between two blocked permutation systems.
    Automorphisms(PairArgs),
    /// Compare two density profiles over a model catalog.
    Randomizations(PairArgs),
    /// Run a job file.
    Run {
        job: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a certificate against the job it claims to answer.
    Verify {
        #[arg(long)]
        cert: PathBuf,
        #[arg(long, conflicts_with_all = ["left", "right"])]
        job: Option<PathBuf>,
        #[command(flatten)]
        pair: OptionalPair,
    },
}

#[derive(Debug, Args)]
struct Params {
    /// Real for operators, exact "p/q" or decimal for automorphisms.
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    tower_height: Option<String>,
    #[arg(long)]
    schedule: Option<PathBuf>,
    #[arg(long)]
    cluster_tol: Option<String>,
    #[arg(long)]
    catalog: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PairArgs {
    #[arg(long)]
    left: PathBuf,
    #[arg(long)]
    right: PathBuf,
    #[command(flatten)]
    params: Params,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OptionalPair {
    #[arg(long, requires = "right")]
    left: Option<PathBuf>,
    #[arg(long, requires = "left")]
    right: Option<PathBuf>,
    #[command(flatten)]
    params: Params,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(path.display(), e))
}

/// A flag value becomes a JSON number when it reads as one, a string otherwise.
fn flag_value(s: &str) -> Value {
    match serde_json::from_str::<Value>(s) {
        Ok(v @ Value::Number(_)) => v,
        _ => Value::String(s.to_string()),
    }
}

fn job_from_flags(kind: JobKind, left: &Path, right: &Path, p: &Params) -> Result<Job, CliError> {
    let left = read_json(left)?;
    let right = read_json(right)?;
    let epsilon = p.epsilon.as_deref().map(flag_value);
    let cluster_tol = p.cluster_tol.as_deref().map(flag_value);
    let tower_height = p.tower_height.as_deref().map(flag_value);
    let schedule = p.schedule.as_deref().map(read_json).transpose()?;
    let catalog = p.catalog.as_deref().map(read_json).transpose()?;
    let params = JobParams {
        epsilon: epsilon.as_ref(),
        cluster_tol: cluster_tol.as_ref(),
        tower_height: tower_height.as_ref(),
        schedule: schedule.as_ref(),
        catalog: catalog.as_ref(),
    };
    build_job(kind, &left, &right, &params)
}

fn emit(cert: &Certificate, out: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(cert).map_err(|e| CliError::Internal(e.to_string()))?;
    match out {
        Some(path) => std::fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            // A closed pipe on stdout is not an error worth reporting.
            let _ = writeln!(std::io::stdout(), "{text}");
            Ok(())
        }
    }
}

fn execute(command: Command) -> Result<i32, CliError> {
    let (kind, args) = match command {
        Command::Operators(a) => (JobKind::Operators, a),
        Command::Descriptions(a) => (JobKind::Descriptions, a),
        Command::Algebras(a) => (JobKind::Algebras, a),
        Command::Automorphisms(a) => (JobKind::Automorphisms, a),
        Command::Randomizations(a) => (JobKind::Randomizations, a),
        Command::Run { job, out } => {
            let job = parse_job(&read_text(&job)?)?;
            let cert = run(&job)?;
            emit(&cert, out.as_deref())?;
            eprintln!("{}", cert.verdict);
            return Ok(cert.exit_code());
        }
        Command::Verify { cert, job, pair } => {
            let cert: Certificate = serde_json::from_str(&read_text(&cert)?)
                .map_err(|e| CliError::parse(cert.display(), e))?;
            let job = match (job, pair.left, pair.right) {
                (Some(path), _, _) => parse_job(&read_text(&path)?)?,
                (None, Some(l), Some(r)) => {
                    let kind = JobKind::from_name(&cert.kind)
                        .ok_or_else(|| CliError::parse("kind", format!("unknown kind {:?}", cert.kind)))?;
                    job_from_flags(kind, &l, &r, &pair.params)?
                }
                _ => return Err(CliError::parse("verify", "give --job or both --left and --right")),
            };
            return Ok(match verify(&cert, &job) {
                Ok(()) => {
                    let _ = writeln!(std::io::stdout(), "valid");
                    0
                }
                Err(reason) => {
                    let _ = writeln!(std::io::stdout(), "invalid: {reason}");
                    1
                }
            });
        }
    };
    let job = job_from_flags(kind, &args.left, &args.right, &args.params)?;
    let cert = run(&job)?;
    emit(&cert, args.out.as_deref())?;
    eprintln!("{}", cert.verdict);
    Ok(cert.exit_code())
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
