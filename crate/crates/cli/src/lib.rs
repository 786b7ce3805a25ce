//! Command-line front end: reads a state description, runs the analysis and
//! writes a text or JSON report, a CSV sweep, or an oracle comparison.
//!
//! Exit codes: 0 success, 2 parse or validation error, 3 convergence or
//! certification failure, 4 oracle gap above [`ORACLE_GAP_LIMIT`].

pub mod report;
pub mod spec;
pub mod sweep;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;
use xree::OracleConfig;

pub use report::{analyze, AnalysisOptions, AnalysisReport, MethodChoice, ValueKind};
pub use spec::StateSpec;
pub use sweep::{grid, run_sweep, write_csv, SweepParam};

/// Oracle gap that trips exit code 4.
pub const ORACLE_GAP_LIMIT: f64 = 1e-3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] xree::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use xree::Error as E;
        match self {
            CliError::Parse(_) | CliError::Validation(_) | CliError::Output(_) => 2,
            CliError::Core(E::InvalidParams(_) | E::StructureViolation(_) | E::NonPositive(_)) => 2,
            CliError::Core(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "xree", version, about = "Relative entropy of entanglement for six-element two-qubit states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyse one state.
    Analyze(AnalyzeArgs),
    /// Sweep one parameter and write CSV.
    Sweep(SweepArgs),
    /// Compare the oracle against the certified value.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum, default_value_t = MethodChoice::Auto)]
    pub method: MethodChoice,
    /// Also run the product-ensemble oracle.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, default_value_t = xree::DEFAULT_SEED)]
    pub seed: u64,
    /// Slack on the product-state bound of the certificate.
    #[arg(long, default_value_t = xree::witness::DEFAULT_OVERLAP_TOL)]
    pub tol: f64,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl SolveArgs {
    fn options(&self, timing: bool) -> AnalysisOptions {
        AnalysisOptions {
            method: self.method,
            oracle: self.oracle,
            seed: self.seed,
            overlap_tolerance: self.tol,
            timing,
            ..AnalysisOptions::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// JSON state description.
    pub spec: PathBuf,
    #[command(flatten)]
    pub solve: SolveArgs,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Record wall-clock time (makes output run-dependent).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub spec: PathBuf,
    #[arg(long, value_enum)]
    pub param: SweepParam,
    #[arg(long, allow_negative_numbers = true)]
    pub from: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub to: f64,
    /// Number of rows, endpoints included.
    #[arg(long)]
    pub steps: usize,
    #[command(flatten)]
    pub solve: SolveArgs,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub spec: PathBuf,
    /// Number of product components.
    #[arg(long, default_value_t = 8)]
    pub components: usize,
    #[arg(long, default_value_t = 64)]
    pub restarts: usize,
    #[arg(long, default_value_t = xree::DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = xree::witness::DEFAULT_OVERLAP_TOL)]
    pub tol: f64,
}

/// Runs a parsed command. Data goes to `out` (or `--out`), row-level
/// diagnostics to `diag`. Returns the exit code for completed runs.
pub fn run(cli: &Cli, out: &mut dyn Write, diag: &mut dyn Write) -> Result<u8, CliError> {
    match &cli.command {
        Command::Analyze(a) => {
            let start = Instant::now();
            let input = StateSpec::load(&a.spec)?;
            let p = input.resolve()?;
            let report = report::analyze_params(input, &p, &a.solve.options(a.timing), start)?;
            let text = match a.format {
                Format::Text => report.to_text(),
                Format::Json => {
                    let mut s = serde_json::to_string_pretty(&report).map_err(|e| CliError::Output(e.to_string()))?;
                    s.push('\n');
                    s
                }
            };
            emit(a.solve.out.as_deref(), out, text.as_bytes())?;
            let uncertified = report.certificate.is_some_and(|c| !c.passed);
            Ok(if uncertified { 3 } else { 0 })
        }
        Command::Sweep(s) => {
            let base = StateSpec::load(&s.spec)?.resolve()?;
            let rows = run_sweep(&base, s.param, &grid(s.from, s.to, s.steps), &s.solve.options(false));
            for row in &rows {
                if let sweep::RowOutcome::Invalid(m) | sweep::RowOutcome::Failed(m) = &row.outcome {
                    writeln!(diag, "{} = {:e}: {m}", s.param.name(), row.value)?;
                }
            }
            let mut buf = Vec::new();
            write_csv(&mut buf, s.param, &rows, s.solve.oracle)?;
            emit(s.solve.out.as_deref(), out, &buf)?;
            Ok(0)
        }
        Command::Oracle(o) => {
            let input = StateSpec::load(&o.spec)?;
            let opts = AnalysisOptions {
                oracle: true,
                seed: o.seed,
                overlap_tolerance: o.tol,
                oracle_config: OracleConfig {
                    components: o.components,
                    restarts: o.restarts,
                    ..OracleConfig::default()
                },
                ..AnalysisOptions::default()
            };
            let r = analyze(&input, &opts)?;
            let oracle = r.oracle.expect("oracle requested");
            let gap = oracle.gap.abs();
            writeln!(
                out,
                "oracle {:.16e} reference {:.16e} ({}, {}) gap {:.3e}",
                oracle.value,
                r.e_r,
                r.value_kind.label(),
                r.method,
                gap
            )?;
            Ok(if gap > ORACLE_GAP_LIMIT { 4 } else { 0 })
        }
    }
}

fn emit(path: Option<&Path>, out: &mut dyn Write, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::Output(format!("{}: {e}", p.display()))),
        None => Ok(out.write_all(bytes)?),
    }
}
