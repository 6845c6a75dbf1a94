//! Command-line front end used by the `risbf` binary.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::harness::{self, ExperimentConfig, HarnessError};
use crate::validation;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "risbf", version, about = "RIS-aided MIMO channel estimation and beamforming sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a Monte Carlo power sweep and write trial means as CSV.
    Sweep(SweepArgs),
    /// Run the reduced-scale self checks.
    Validate(ValidateArgs),
    /// Compare pair selection with exhaustive search on one realization.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
struct Overrides {
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// mmwave28 or thz142.
    #[arg(long)]
    band: Option<String>,
    /// Comma-separated transmit powers in dBm.
    #[arg(long, allow_hyphen_values = true)]
    ptx: Option<String>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write full-precision per-trial values here.
    #[arg(long)]
    trial_log: Option<PathBuf>,
    /// Write a matplotlib script that plots the CSV (needs --out).
    #[arg(long, requires = "out")]
    plot_script: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Trial index of the realization to inspect.
    #[arg(long, default_value_t = 0)]
    trial: usize,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn resolve(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path).map_err(|e| match e {
                HarnessError::Io { path, source } => HarnessError::Config(harness::ConfigError {
                    field: "config".into(),
                    message: format!("cannot read {}: {source}", path.display()),
                    line: None,
                }),
                other => other,
            })?,
            None => ExperimentConfig::default(),
        };
        if let Some(band) = &self.band {
            cfg.set("band", band)?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(ptx) = &self.ptx {
            cfg.ptx_dbm = harness::parse_ptx_list(ptx)?;
        }
        if let Some(threads) = self.threads {
            cfg.threads = threads;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exit_code(err: &HarnessError) -> i32 {
    match err {
        HarnessError::Config(_) | HarnessError::Parse { .. } => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<(), HarnessError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|source| HarnessError::Io {
            path: p.clone(),
            source,
        }),
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn run_sweep(args: &SweepArgs) -> Result<i32, HarnessError> {
    let cfg = args.overrides.resolve()?;
    let out = harness::run_experiment_detailed(&cfg)?;
    write_output(args.out.as_ref(), &harness::format_records(&out.records))?;
    if let Some(log) = &args.trial_log {
        harness::write_trial_log(&out.trials, log)?;
    }
    if let (Some(script), Some(csv)) = (&args.plot_script, &args.out) {
        harness::write_plot_script(csv, script)?;
    }
    if !out.audit.is_satisfied() {
        eprintln!("warning: constraint audit outside tolerance: {}", out.audit);
    }
    Ok(EXIT_OK)
}

fn run_validate(args: &ValidateArgs) -> Result<i32, HarnessError> {
    let checks = validation::run_validation(args.seed)?;
    let mut failed = 0;
    for c in &checks {
        println!("{c}");
        failed += usize::from(!c.passed);
    }
    println!("{} of {} checks passed", checks.len() - failed, checks.len());
    Ok(if failed == 0 { EXIT_OK } else { EXIT_RUNTIME })
}

fn run_oracle(args: &OracleArgs) -> Result<i32, HarnessError> {
    let cfg = args.overrides.resolve()?;
    let mut text = String::new();
    for &ptx in &cfg.ptx_dbm {
        let report = validation::oracle_report(&cfg, args.trial, ptx)?;
        text.push_str(&format!("{report}\n\n"));
    }
    write_output(args.out.as_ref(), &text)?;
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Sweep(a) => run_sweep(a),
        Command::Validate(a) => run_validate(a),
        Command::Oracle(a) => run_oracle(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, HarnessError::Config(_)) {
                eprintln!("run `risbf --help` for usage");
            }
            exit_code(&e)
        }
    }
}
