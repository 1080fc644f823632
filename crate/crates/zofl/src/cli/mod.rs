//! The `zofl` command line: `params`, `run`, `sweep-k` and `validate`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error, 4 failed
//! validation.

mod commands;
mod config;
mod validate;

pub use commands::{
    cmd_params, cmd_run, cmd_sweep_k, cmd_validate, scheme_label, sweep_csv, Prepared, RunSummary, SchemeSummary, Summary, SweepRow,
};
pub use config::{
    min_constants, saddle_constants, BuiltProblem, ConstantOverrides, Depth, ExperimentConfig, OperatorKind, ProblemSpec, Schemes,
    SigmaRule, SigmaSpec, SweepSpec,
};
pub use validate::{bias_slope, isotropy, run_suite, sandwich, second_moment, sphere_norm, unbiasedness, Check, BIAS_LEVELS};

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "zofl", version, about = "Gradient-free federated optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the parameter plan as JSON.
    Params(Common),
    /// Run seeded experiments and write CSV traces plus summary.json.
    Run(Common),
    /// Sweep the number of local calls K at a fixed budget.
    SweepK(Common),
    /// Run the Monte-Carlo estimator checks.
    Validate(Common),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repeat: Option<u64>,
    #[arg(long, env = "ZOFL_THREADS")]
    threads: Option<usize>,
}

impl Common {
    fn load(&self) -> crate::Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.repeat {
            cfg.repeat = r;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Unsupported(_) | Error::Json(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = if code == EXIT_OK { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> crate::Result<i32> {
    match command {
        Command::Params(c) => {
            let cfg = c.load()?;
            let plans = cmd_params(&cfg)?;
            let json = if plans.len() == 1 { serde_json::to_string_pretty(&plans[0])? } else { serde_json::to_string_pretty(&plans)? };
            writeln!(out, "{json}")?;
            Ok(EXIT_OK)
        }
        Command::Run(c) => {
            let cfg = c.load()?;
            let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("zofl-out"));
            let summary = cmd_run(&cfg, Some(&dir))?;
            for r in summary.runs.iter().filter(|r| r.aborted.is_some()) {
                writeln!(err, "warning: run {} seed {} aborted: {}", scheme_label(r.scheme), r.seed, r.aborted.as_deref().unwrap_or(""))?;
            }
            writeln!(out, "{}", serde_json::to_string_pretty(&summary)?)?;
            Ok(EXIT_OK)
        }
        Command::SweepK(c) => {
            let cfg = c.load()?;
            let rows = cmd_sweep_k(&cfg, c.out.as_deref())?;
            write!(out, "{}", sweep_csv(&rows)?)?;
            Ok(EXIT_OK)
        }
        Command::Validate(c) => {
            let cfg = c.load()?;
            let checks = cmd_validate(&cfg)?;
            for ch in &checks {
                writeln!(out, "{}", ch.line())?;
            }
            let failed = checks.iter().filter(|c| !c.pass).count();
            writeln!(out, "{} checks, {} failed", checks.len(), failed)?;
            Ok(if failed == 0 { EXIT_OK } else { EXIT_VALIDATION })
        }
    }
}
