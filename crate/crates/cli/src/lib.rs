//! Command-line front end: list scenarios, run them, estimate CHSH.
//!
//! Records are emitted as JSON (the full record) or CSV (the frequency table
//! only). Exit status is 0 on success, 1 when `--check` finds a statistical
//! failure, and 2 on any usage or configuration error.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use handshake_core::harness::{self, ChshResult, ComparisonReport};
use handshake_core::scenarios;
use handshake_core::ENGINE_VERSION;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// `--check` window for the CHSH value.
pub const CHSH_TARGET: f64 = 2.828;
pub const CHSH_TOLERANCE: f64 = 0.05;

/// Fixed CSV header for frequency tables.
pub const CSV_HEADER: [&str; 5] = ["outcome", "count", "frequency", "expected", "pass"];

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Engine(#[from] handshake_core::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot encode output: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot encode CSV: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Parser)]
#[command(name = "handshake", version, about = "Transaction-per-trial quantum event simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List scenarios with their parameters and defaults
    List,
    /// Run a scenario and emit its frequency table
    Run(RunArgs),
    /// Estimate the CHSH value of the singlet at the canonical angles
    Chsh(ChshArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario name (see `list`)
    pub scenario: String,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    #[arg(long, env = "HANDSHAKE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Parameter override, repeatable
    #[arg(long = "param", value_name = "NAME=VALUE", value_parser = parse_param)]
    pub params: Vec<(String, f64)>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file (default: standard output)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Compare against the expected table and gate the exit status
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Args)]
pub struct ChshArgs {
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials_per_setting: u64,
    #[arg(long, env = "HANDSHAKE_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Pass iff |S - 2.828| <= 0.05
    #[arg(long)]
    pub check: bool,
}

fn parse_param(raw: &str) -> Result<(String, f64), String> {
    let (name, value) = raw
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got {raw:?}"))?;
    let name = name.trim();
    if name.is_empty() {
        return Err(format!("empty parameter name in {raw:?}"));
    }
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|e| format!("bad value for {name}: {e}"))?;
    if !value.is_finite() {
        return Err(format!("value for {name} must be finite"));
    }
    Ok((name.to_string(), value))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub scenario: String,
    pub parameters: BTreeMap<String, f64>,
    pub seed: u64,
    pub trials: u64,
    pub counts: BTreeMap<String, u64>,
    pub frequencies: BTreeMap<String, f64>,
    pub expected: BTreeMap<String, f64>,
    pub report: ComparisonReport,
    pub engine_version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshSettingRecord {
    pub setting: String,
    pub angle_a: f64,
    pub angle_b: f64,
    pub correlation: f64,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshRecord {
    pub seed: u64,
    pub trials_per_setting: u64,
    pub s: f64,
    pub settings: Vec<ChshSettingRecord>,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub engine_version: String,
}

impl ChshRecord {
    pub fn from_result(seed: u64, trials_per_setting: u64, result: ChshResult) -> Self {
        ChshRecord {
            seed,
            trials_per_setting,
            s: result.s,
            pass: (result.s - CHSH_TARGET).abs() <= CHSH_TOLERANCE,
            settings: result
                .settings
                .into_iter()
                .map(|s| ChshSettingRecord {
                    setting: s.setting,
                    angle_a: s.angle_a,
                    angle_b: s.angle_b,
                    correlation: s.correlation,
                    counts: s.table.counts,
                })
                .collect(),
            target: CHSH_TARGET,
            tolerance: CHSH_TOLERANCE,
            engine_version: ENGINE_VERSION.to_string(),
        }
    }
}

/// Runs a scenario and assembles its record.
pub fn run_record(
    scenario: &str,
    overrides: &BTreeMap<String, f64>,
    trials: u64,
    seed: u64,
) -> Result<OutputRecord, CliError> {
    let def = scenarios::build(scenario, overrides)?;
    let (table, report) = harness::run_and_compare(&def, trials, seed)?;
    Ok(OutputRecord {
        scenario: def.name.clone(),
        parameters: def.parameters.clone(),
        seed,
        trials: table.trials,
        frequencies: table.frequencies(),
        counts: table.counts,
        expected: def.expected_with_no_transaction(),
        report,
        engine_version: ENGINE_VERSION.to_string(),
    })
}

pub fn to_json<T: Serialize>(record: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(record)?;
    text.push('\n');
    Ok(text)
}

/// Frequency table as CSV with the fixed [`CSV_HEADER`].
pub fn to_csv(record: &OutputRecord) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for row in &record.report.rows {
        w.write_record([
            row.outcome.clone(),
            row.count.to_string(),
            row.observed.to_string(),
            row.expected.to_string(),
            row.pass.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn chsh_to_csv(record: &ChshRecord) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["setting", "angle_a", "angle_b", "correlation", "trials"])?;
    for s in &record.settings {
        w.write_record([
            s.setting.clone(),
            s.angle_a.to_string(),
            s.angle_b.to_string(),
            s.correlation.to_string(),
            record.trials_per_setting.to_string(),
        ])?;
    }
    w.write_record(["S", "", "", &record.s.to_string(), ""])?;
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn list_text() -> String {
    let mut out = String::new();
    for info in scenarios::catalog() {
        out.push_str(&format!("{}\t{}\n", info.name, info.description));
        for p in info.params {
            out.push_str(&format!("    {} = {}\t{}\n", p.name, p.default, p.description));
        }
    }
    out
}

fn emit(text: &str, out: Option<&PathBuf>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Executes a parsed command, writing records to `stdout` (or `--out`), and
/// returns the process exit status.
pub fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::List => {
            stdout.write_all(list_text().as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Run(args) => {
            let overrides: BTreeMap<String, f64> = args.params.iter().cloned().collect();
            let record = run_record(&args.scenario, &overrides, args.trials, args.seed)?;
            let text = match args.format {
                Format::Json => to_json(&record)?,
                Format::Csv => to_csv(&record)?,
            };
            emit(&text, args.out.as_ref(), stdout)?;
            Ok(if args.check && !record.report.pass {
                EXIT_CHECK_FAILED
            } else {
                EXIT_OK
            })
        }
        Command::Chsh(args) => {
            let result = harness::chsh_run(args.seed, args.trials_per_setting)?;
            let record = ChshRecord::from_result(args.seed, args.trials_per_setting, result);
            let text = match args.format {
                Format::Json => to_json(&record)?,
                Format::Csv => chsh_to_csv(&record)?,
            };
            emit(&text, args.out.as_ref(), stdout)?;
            Ok(if args.check && !record.pass {
                EXIT_CHECK_FAILED
            } else {
                EXIT_OK
            })
        }
    }
}
